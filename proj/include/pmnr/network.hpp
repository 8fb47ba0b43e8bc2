#pragma once

#include "pmnr/common.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pmnr {

enum class ActivationType
{
    Identity,
    Relu,
    LeakyRelu,
    Abs,
};

struct Activation
{
    ActivationType type = ActivationType::Identity;
    // Negative-side slope, only meaningful for LeakyRelu.
    double slope = 0.0;

    static Activation identity()
    {
        return { ActivationType::Identity, 0.0 };
    }
    static Activation relu()
    {
        return { ActivationType::Relu, 0.0 };
    }
    static Activation abs()
    {
        return { ActivationType::Abs, 0.0 };
    }
    static Activation leakyRelu( double slope )
    {
        return { ActivationType::LeakyRelu, slope };
    }

    bool isPiecewiseLinear() const
    {
        return type != ActivationType::Identity;
    }

    double operator()( double x ) const
    {
        switch ( type )
        {
        case ActivationType::Identity:
            return x;
        case ActivationType::Relu:
            return x > 0 ? x : 0.0;
        case ActivationType::LeakyRelu:
            return x > 0 ? x : slope * x;
        case ActivationType::Abs:
            return std::fabs( x );
        }
        return x;
    }

    Vector apply( const Vector &x ) const
    {
        Vector out( x.size() );
        for ( Eigen::Index j = 0; j < x.size(); ++j )
            out[j] = ( *this )( x[j] );
        return out;
    }

    friend bool operator==( const Activation &, const Activation & ) = default;
};

std::string activationName( const Activation &activation );

struct Layer
{
    Matrix weights; // n_i x n_{i-1}, rows are output neurons
    Vector bias;
    Activation activation;
};

/*
  Dense feedforward network. Layers are indexed 1..L as in the usual
  notation: layer i maps the post-activation vector of layer i-1 to the
  pre-activation vector of layer i. Layer 0 is the input. The last layer is
  affine only.
*/
class Network
{
public:
    Network() = default;

    explicit Network( std::vector<Layer> layers )
        : _layers( std::move( layers ) )
    {
        validate();
    }

    // Number of affine layers L.
    unsigned numLayers() const
    {
        return static_cast<unsigned>( _layers.size() );
    }

    // Width n_i for i in 0..L.
    unsigned width( unsigned i ) const
    {
        if ( i == 0 )
            return static_cast<unsigned>( _layers.front().weights.cols() );
        return static_cast<unsigned>( layer( i ).weights.rows() );
    }

    unsigned inputSize() const
    {
        return width( 0 );
    }

    unsigned outputSize() const
    {
        return width( numLayers() );
    }

    // 1-based access.
    const Layer &layer( unsigned i ) const
    {
        if ( i == 0 || i > _layers.size() )
            throw std::out_of_range( "layer index " + std::to_string( i ) );
        return _layers[i - 1];
    }

    const std::vector<Layer> &layers() const
    {
        return _layers;
    }

    unsigned totalHiddenNeurons() const
    {
        unsigned total = 0;
        for ( unsigned i = 1; i < numLayers(); ++i )
            total += width( i );
        return total;
    }

    friend bool operator==( const Network &a, const Network &b )
    {
        if ( a._layers.size() != b._layers.size() )
            return false;
        for ( size_t i = 0; i < a._layers.size(); ++i )
        {
            const Layer &x = a._layers[i];
            const Layer &y = b._layers[i];
            if ( !( x.activation == y.activation ) || x.weights.rows() != y.weights.rows() ||
                 x.weights.cols() != y.weights.cols() || x.weights != y.weights ||
                 x.bias != y.bias )
                return false;
        }
        return true;
    }

private:
    std::vector<Layer> _layers;

    void validate() const
    {
        if ( _layers.empty() )
            throw DimensionError( "network has no layers" );
        for ( size_t i = 0; i < _layers.size(); ++i )
        {
            const Layer &l = _layers[i];
            std::string where = "layer " + std::to_string( i + 1 );
            if ( l.weights.rows() == 0 || l.weights.cols() == 0 )
                throw DimensionError( where + " has empty weights" );
            if ( l.bias.size() != l.weights.rows() )
                throw DimensionError( where + " bias length " + std::to_string( l.bias.size() ) +
                                      " does not match " + std::to_string( l.weights.rows() ) +
                                      " rows" );
            if ( i > 0 && l.weights.cols() != _layers[i - 1].weights.rows() )
                throw DimensionError( where + " expects " + std::to_string( l.weights.cols() ) +
                                      " inputs but previous layer has width " +
                                      std::to_string( _layers[i - 1].weights.rows() ) );
            if ( l.activation.type == ActivationType::LeakyRelu &&
                 !( l.activation.slope > 0.0 && l.activation.slope < 1.0 ) )
                throw DimensionError( where + " leaky_relu slope must lie in (0,1)" );
            if ( !l.weights.allFinite() || !l.bias.allFinite() )
                throw DimensionError( where + " contains non-finite numbers" );
        }
        if ( _layers.back().activation.type != ActivationType::Identity )
            throw DimensionError( "output layer must use the identity activation" );
    }
};

// Values of every neuron for one input. pre[i] = x(i) for i in 1..L
// (pre[0] holds the input), post[i] = h(i) for i in 0..L (post[L] = pre[L]).
struct Trace
{
    std::vector<Vector> pre;
    std::vector<Vector> post;

    const Vector &output() const
    {
        return post.back();
    }
};

inline Trace forward( const Network &net, const Vector &input )
{
    if ( input.size() != static_cast<Eigen::Index>( net.inputSize() ) )
        throw DimensionError( "input has dimension " + std::to_string( input.size() ) +
                              ", network expects " + std::to_string( net.inputSize() ) );
    Trace trace;
    trace.pre.push_back( input );
    trace.post.push_back( input );
    for ( unsigned i = 1; i <= net.numLayers(); ++i )
    {
        const Layer &layer = net.layer( i );
        Vector x = layer.weights * trace.post.back() + layer.bias;
        trace.post.push_back( layer.activation.apply( x ) );
        trace.pre.push_back( std::move( x ) );
    }
    return trace;
}

inline Vector evaluate( const Network &net, const Vector &input )
{
    return forward( net, input ).output();
}

// Input domains.

struct Box
{
    Vector lower;
    Vector upper;
};

struct LpBall
{
    Vector center;
    double radius = 0.0;
    double p = kInfinity; // p >= 1, or infinity
};

// { x : A x + b <= 0 }
struct Polyhedron
{
    Matrix A;
    Vector b;
};

using InputDomain = std::variant<Box, LpBall, Polyhedron>;

unsigned domainDimension( const InputDomain &domain );
void validateDomain( const InputDomain &domain );

inline unsigned domainDimension( const InputDomain &domain )
{
    return std::visit(
        []( const auto &d ) -> unsigned {
            using T = std::decay_t<decltype( d )>;
            if constexpr ( std::is_same_v<T, Box> )
                return static_cast<unsigned>( d.lower.size() );
            else if constexpr ( std::is_same_v<T, LpBall> )
                return static_cast<unsigned>( d.center.size() );
            else
                return static_cast<unsigned>( d.A.cols() );
        },
        domain );
}

inline void validateDomain( const InputDomain &domain )
{
    if ( const Box *box = std::get_if<Box>( &domain ) )
    {
        if ( box->lower.size() != box->upper.size() )
            throw DimensionError( "box lower/upper lengths differ" );
        for ( Eigen::Index j = 0; j < box->lower.size(); ++j )
            if ( !( box->lower[j] <= box->upper[j] ) )
                throw DimensionError( "box lower exceeds upper at coordinate " +
                                      std::to_string( j ) );
    }
    else if ( const LpBall *ball = std::get_if<LpBall>( &domain ) )
    {
        if ( !( ball->radius > 0 ) )
            throw DimensionError( "ball radius must be positive" );
        if ( !( ball->p >= 1.0 ) )
            throw DimensionError( "ball norm order must be >= 1" );
    }
    else
    {
        const Polyhedron &poly = std::get<Polyhedron>( domain );
        if ( poly.A.rows() != poly.b.size() )
            throw DimensionError( "polyhedron A and b row counts differ" );
    }
}

enum class OutputDirection
{
    Greater, // exists x with N(x) > threshold
    Less,    // exists x with N(x) < threshold
};

struct OutputProperty
{
    OutputDirection direction = OutputDirection::Greater;
    double threshold = 0.0;
};

/*
  A verification query. The unsafe output set is given by a direction and a
  threshold; canonicalNetwork() folds both into the last layer so that the
  question becomes: exists x in the input domain with N'(x) > 0.
*/
struct Query
{
    Network network;
    InputDomain input;
    OutputProperty output;

    void validate() const
    {
        validateDomain( input );
        if ( domainDimension( input ) != network.inputSize() )
            throw DimensionError( "input domain dimension " +
                                  std::to_string( domainDimension( input ) ) +
                                  " does not match network input size " +
                                  std::to_string( network.inputSize() ) );
        if ( network.outputSize() != 1 )
            throw DimensionError( "queries require a single-output network" );
    }

    double sign() const
    {
        return output.direction == OutputDirection::Greater ? 1.0 : -1.0;
    }

    Network canonicalNetwork() const
    {
        std::vector<Layer> layers = network.layers();
        Layer &last = layers.back();
        double s = sign();
        last.weights *= s;
        last.bias = s * ( last.bias.array() - output.threshold ).matrix();
        return Network( std::move( layers ) );
    }

    // Maps a canonical output value back to the original network output.
    double originalOutput( double canonical ) const
    {
        return sign() * canonical + output.threshold;
    }
};

inline std::string activationName( const Activation &activation )
{
    switch ( activation.type )
    {
    case ActivationType::Identity:
        return "identity";
    case ActivationType::Relu:
        return "relu";
    case ActivationType::LeakyRelu:
        return "leaky_relu";
    case ActivationType::Abs:
        return "abs";
    }
    return "identity";
}

} // namespace pmnr
