#pragma once

#include "pmnr/relax.hpp"
#include "pmnr/simplex.hpp"

#include <optional>
#include <vector>

namespace pmnr {

struct Interval
{
    Vector lower;
    Vector upper;

    static Interval sized( Eigen::Index n )
    {
        return { Vector::Constant( n, -kInfinity ), Vector::Constant( n, kInfinity ) };
    }

    Eigen::Index size() const
    {
        return lower.size();
    }

    bool contains( const Interval &other, double tol ) const
    {
        return ( lower.array() <= other.lower.array() + tol ).all() &&
               ( other.upper.array() <= upper.array() + tol ).all();
    }
};

/*
  Concrete bounds for every neuron. pre[i] bounds x(i) for i in 1..L and
  post[i] bounds h(i) for i in 0..L-1; pre[0] and post[0] hold the input
  bounding box, post[L] mirrors pre[L].
*/
struct BoundsState
{
    std::vector<Interval> pre;
    std::vector<Interval> post;
    bool contradiction = false;

    unsigned numLayers() const
    {
        return static_cast<unsigned>( pre.size() ) - 1;
    }

    Interval output() const
    {
        return pre.back();
    }

    // Post bounds intersected with the activation image of the pre bounds.
    Interval clippedPost( const Network &net, unsigned i ) const
    {
        Interval out = post[i];
        if ( i == 0 || i >= net.numLayers() )
            return out;
        const Activation &act = net.layer( i ).activation;
        for ( Eigen::Index j = 0; j < out.size(); ++j )
        {
            auto [lo, hi] = activationImage( act, pre[i].lower[j], pre[i].upper[j] );
            out.lower[j] = std::max( out.lower[j], lo );
            out.upper[j] = std::min( out.upper[j], hi );
        }
        return out;
    }

    // True if every interval of `inner` lies inside this state's intervals.
    bool contains( const BoundsState &inner, double tol ) const
    {
        if ( inner.contradiction )
            return true;
        if ( contradiction )
            return false;
        for ( size_t i = 0; i < pre.size(); ++i )
            if ( !pre[i].contains( inner.pre[i], tol ) || !post[i].contains( inner.post[i], tol ) )
                return false;
        return true;
    }
};

struct LayerRelax
{
    Vector lowerSlope;
    Vector lowerOffset;
    Vector upperSlope;
    Vector upperOffset;
    Vector alpha;
};

// Diagonal single-neuron relaxations; layers[i] for i in 1..L.
struct SingleRelax
{
    std::vector<LayerRelax> layers;

    NeuronRelax neuron( unsigned i, unsigned j ) const
    {
        const LayerRelax &r = layers[i];
        return { r.lowerSlope[j], r.lowerOffset[j], r.upperSlope[j], r.upperOffset[j] };
    }

    void setNeuron( unsigned i, unsigned j, const NeuronRelax &n )
    {
        LayerRelax &r = layers[i];
        r.lowerSlope[j] = n.lowerSlope;
        r.lowerOffset[j] = n.lowerOffset;
        r.upperSlope[j] = n.upperSlope;
        r.upperOffset[j] = n.upperOffset;
    }
};

// Per-layer alpha vectors, alphas[i] for i in 1..L-1 (alphas[0] unused).
using AlphaSet = std::vector<Vector>;

inline AlphaSet defaultAlphas( const Network &net, const BoundsState &bounds )
{
    AlphaSet alphas( net.numLayers() + 1 );
    for ( unsigned i = 1; i < net.numLayers(); ++i )
    {
        const Activation &act = net.layer( i ).activation;
        alphas[i].resize( net.width( i ) );
        for ( unsigned j = 0; j < net.width( i ); ++j )
            alphas[i][j] = defaultAlpha( act, bounds.pre[i].lower[j], bounds.pre[i].upper[j] );
    }
    return alphas;
}

inline LayerRelax relaxLayer( const Activation &act, const Interval &pre, const Vector &alpha )
{
    Eigen::Index n = pre.size();
    LayerRelax r{ Vector( n ), Vector( n ), Vector( n ), Vector( n ), alpha };
    for ( Eigen::Index j = 0; j < n; ++j )
    {
        NeuronRelax nr = relaxNeuron( act, pre.lower[j], pre.upper[j], alpha[j] );
        r.lowerSlope[j] = nr.lowerSlope;
        r.lowerOffset[j] = nr.lowerOffset;
        r.upperSlope[j] = nr.upperSlope;
        r.upperOffset[j] = nr.upperOffset;
    }
    return r;
}

inline LayerRelax identityRelax( Eigen::Index n )
{
    return { Vector::Ones( n ), Vector::Zero( n ), Vector::Ones( n ), Vector::Zero( n ),
             Vector::Ones( n ) };
}

// Relaxations for every layer from the given bounds.
inline SingleRelax buildRelax( const Network &net, const BoundsState &bounds, const AlphaSet &alphas )
{
    SingleRelax relax;
    relax.layers.resize( net.numLayers() + 1 );
    for ( unsigned i = 1; i < net.numLayers(); ++i )
        relax.layers[i] = relaxLayer( net.layer( i ).activation, bounds.pre[i], alphas[i] );
    relax.layers[net.numLayers()] = identityRelax( net.width( net.numLayers() ) );
    return relax;
}

// Input domains: support functions and bounding boxes.

inline double dualNormOrder( double p )
{
    if ( std::isinf( p ) )
        return 1.0;
    if ( p == 1.0 )
        return kInfinity;
    return p / ( p - 1.0 );
}

inline double norm( const Vector &v, double p )
{
    if ( std::isinf( p ) )
        return v.cwiseAbs().maxCoeff();
    if ( p == 1.0 )
        return v.cwiseAbs().sum();
    if ( p == 2.0 )
        return v.norm();
    return std::pow( v.cwiseAbs().array().pow( p ).sum(), 1.0 / p );
}

// inf over x in the domain of c^T x (exact for boxes and polyhedra, and
// exact for lp balls via the dual norm).
inline double infimumOverDomain( const Vector &c, const InputDomain &domain,
                                 const LpSolver &solver = defaultLpSolver() )
{
    if ( static_cast<unsigned>( c.size() ) != domainDimension( domain ) )
        throw DimensionError( "objective length does not match the input domain" );
    if ( const Box *box = std::get_if<Box>( &domain ) )
        return c.cwiseMax( 0.0 ).dot( box->lower ) + c.cwiseMin( 0.0 ).dot( box->upper );
    if ( const LpBall *ball = std::get_if<LpBall>( &domain ) )
        return c.dot( ball->center ) - ball->radius * norm( c, dualNormOrder( ball->p ) );
    const Polyhedron &poly = std::get<Polyhedron>( domain );
    LinearProgram lp( static_cast<unsigned>( c.size() ) );
    lp.objective = c;
    for ( Eigen::Index r = 0; r < poly.A.rows(); ++r )
        lp.addConstraint( poly.A.row( r ).transpose(), Relation::LessEqual, -poly.b[r] );
    LpOutcome outcome = solver( lp );
    if ( outcome.status == LpStatus::Unbounded )
        throw PreconditionError( "input polyhedron is unbounded along the objective" );
    if ( outcome.status == LpStatus::Infeasible )
        return kInfinity;
    return outcome.value;
}

// The minimizer matching infimumOverDomain, used for gradients.
inline Vector argminOverDomain( const Vector &c, const InputDomain &domain,
                                const LpSolver &solver = defaultLpSolver() )
{
    if ( const Box *box = std::get_if<Box>( &domain ) )
    {
        Vector x( c.size() );
        for ( Eigen::Index j = 0; j < c.size(); ++j )
            x[j] = c[j] > 0 ? box->lower[j] : ( c[j] < 0 ? box->upper[j] : 0.5 * ( box->lower[j] + box->upper[j] ) );
        return x;
    }
    if ( const LpBall *ball = std::get_if<LpBall>( &domain ) )
    {
        double q = dualNormOrder( ball->p );
        Vector dir = Vector::Zero( c.size() );
        double cn = norm( c, q );
        if ( cn > 0 )
        {
            if ( std::isinf( q ) )
            {
                Eigen::Index k;
                c.cwiseAbs().maxCoeff( &k );
                dir[k] = c[k] > 0 ? 1.0 : -1.0;
            }
            else if ( q == 1.0 )
            {
                for ( Eigen::Index j = 0; j < c.size(); ++j )
                    dir[j] = c[j] > 0 ? 1.0 : ( c[j] < 0 ? -1.0 : 0.0 );
            }
            else
            {
                for ( Eigen::Index j = 0; j < c.size(); ++j )
                    dir[j] = ( c[j] > 0 ? 1.0 : -1.0 ) * std::pow( std::fabs( c[j] ) / cn, q - 1.0 );
            }
        }
        return ball->center - ball->radius * dir;
    }
    const Polyhedron &poly = std::get<Polyhedron>( domain );
    LinearProgram lp( static_cast<unsigned>( c.size() ) );
    lp.objective = c;
    for ( Eigen::Index r = 0; r < poly.A.rows(); ++r )
        lp.addConstraint( poly.A.row( r ).transpose(), Relation::LessEqual, -poly.b[r] );
    LpOutcome outcome = solver( lp );
    if ( outcome.status != LpStatus::Optimal )
        throw PreconditionError( "input polyhedron has no finite minimizer" );
    return outcome.point;
}

// Axis-aligned bounding box of the domain.
inline Interval domainBox( const InputDomain &domain, const LpSolver &solver = defaultLpSolver() )
{
    if ( const Box *box = std::get_if<Box>( &domain ) )
        return { box->lower, box->upper };
    if ( const LpBall *ball = std::get_if<LpBall>( &domain ) )
    {
        Vector r = Vector::Constant( ball->center.size(), ball->radius );
        return { ball->center - r, ball->center + r };
    }
    unsigned n = domainDimension( domain );
    Interval out = Interval::sized( n );
    for ( unsigned j = 0; j < n; ++j )
    {
        Vector e = Vector::Zero( n );
        e[j] = 1.0;
        out.lower[j] = infimumOverDomain( e, domain, solver );
        out.upper[j] = -infimumOverDomain( -e, domain, solver );
    }
    return out;
}

inline bool domainContains( const InputDomain &domain, const Vector &x, double tol )
{
    if ( const Box *box = std::get_if<Box>( &domain ) )
        return ( x.array() >= box->lower.array() - tol ).all() &&
               ( x.array() <= box->upper.array() + tol ).all();
    if ( const LpBall *ball = std::get_if<LpBall>( &domain ) )
        return norm( x - ball->center, ball->p ) <= ball->radius + tol;
    const Polyhedron &poly = std::get<Polyhedron>( domain );
    return ( ( poly.A * x + poly.b ).array() <= tol ).all();
}

enum class BoundDirection
{
    Lower,
    Upper,
};

// coeffs^T v + offset over the variables of a reference layer: pre-activation
// x(layer) for layer >= 1, the input for layer 0.
struct SymbolicBound
{
    unsigned layer = 0;
    Vector coeffs;
    double offset = 0.0;
    BoundDirection direction = BoundDirection::Upper;
};

/*
  Back-substitutes rows A v + c over x(fromLayer) to variables of downTo.
  Upper direction replaces activations with upper lines under positive
  coefficients and lower lines under negative ones; Lower swaps them.
*/
inline void backsubstituteRows( const Network &net, const SingleRelax &relax, Matrix &A, Vector &c,
                                unsigned fromLayer, unsigned downTo, BoundDirection direction )
{
    if ( fromLayer < downTo )
        throw PreconditionError( "back-substitution target lies below the stopping layer" );
    bool upper = direction == BoundDirection::Upper;
    for ( unsigned i = fromLayer; i > downTo; --i )
    {
        const Layer &layer = net.layer( i );
        // Over x(i) -> over h(i-1).
        c += A * layer.bias;
        A = A * layer.weights;
        if ( i - 1 == 0 )
            break;
        // Over h(i-1) -> over x(i-1).
        const LayerRelax &r = relax.layers[i - 1];
        Matrix pos = A.cwiseMax( 0.0 );
        Matrix neg = A.cwiseMin( 0.0 );
        if ( upper )
        {
            c += pos * r.upperOffset + neg * r.lowerOffset;
            A = pos * r.upperSlope.asDiagonal() + neg * r.lowerSlope.asDiagonal();
        }
        else
        {
            c += pos * r.lowerOffset + neg * r.upperOffset;
            A = pos * r.lowerSlope.asDiagonal() + neg * r.upperSlope.asDiagonal();
        }
    }
}

inline SymbolicBound backsubstitute( const Network &net, const SingleRelax &relax,
                                     const SymbolicBound &target, unsigned downTo )
{
    Matrix A = target.coeffs.transpose();
    Vector c = Vector::Constant( 1, target.offset );
    backsubstituteRows( net, relax, A, c, target.layer, downTo, target.direction );
    return { downTo, A.row( 0 ).transpose(), c[0], target.direction };
}

inline double concretize( const SymbolicBound &sb, const InputDomain &domain,
                          const LpSolver &solver = defaultLpSolver() )
{
    if ( sb.direction == BoundDirection::Lower )
        return infimumOverDomain( sb.coeffs, domain, solver ) + sb.offset;
    return -infimumOverDomain( -sb.coeffs, domain, solver ) + sb.offset;
}

inline double concretize( const SymbolicBound &sb, const Interval &box )
{
    if ( sb.coeffs.size() != box.size() )
        throw DimensionError( "symbolic bound length does not match the box" );
    const Vector &c = sb.coeffs;
    double value = 0.0;
    for ( Eigen::Index j = 0; j < c.size(); ++j )
    {
        if ( c[j] == 0.0 )
            continue;
        bool useUpper = ( c[j] > 0 ) == ( sb.direction == BoundDirection::Upper );
        value += c[j] * ( useUpper ? box.upper[j] : box.lower[j] );
    }
    return value + sb.offset;
}

namespace detail {

// Intersects `value` into `slot`; returns false on an empty interval.
inline bool intersect( Interval &slot, Eigen::Index j, double lo, double hi )
{
    double l = std::max( slot.lower[j], lo );
    double u = std::min( slot.upper[j], hi );
    if ( l > u )
    {
        if ( l - u > 1e-9 * std::max( 1.0, std::max( std::fabs( l ), std::fabs( u ) ) ) )
            return false;
        double mid = 0.5 * ( l + u );
        l = u = mid;
    }
    slot.lower[j] = l;
    slot.upper[j] = u;
    return true;
}

inline Interval rowsBox( const Matrix &A, const Vector &c, const InputDomain &domain, bool upper,
                         const LpSolver &solver )
{
    Interval out = Interval::sized( A.rows() );
    for ( Eigen::Index j = 0; j < A.rows(); ++j )
    {
        Vector row = A.row( j ).transpose();
        double v = upper ? -infimumOverDomain( -row, domain, solver ) : infimumOverDomain( row, domain, solver );
        ( upper ? out.upper : out.lower )[j] = v + c[j];
    }
    return out;
}

} // namespace detail

inline BoundsState emptyBounds( const Network &net )
{
    BoundsState b;
    for ( unsigned i = 0; i <= net.numLayers(); ++i )
    {
        b.pre.push_back( Interval::sized( net.width( i ) ) );
        b.post.push_back( Interval::sized( net.width( i ) ) );
    }
    return b;
}

struct DeepPolyResult
{
    BoundsState bounds;
    SingleRelax relax;
};

/*
  DeepPoly: each layer's pre-activation rows are back-substituted through all
  earlier relaxations to the input and concretized over the domain. Post
  bounds are the range of the relaxation lines over [l,u] (not clipped to the
  activation image; see BoundsState::clippedPost). `prior` bounds, when
  given, are intersected in at every layer and may yield a contradiction.
  `alphas` entries that are NaN (or a missing set) select the default rule.
*/
inline DeepPolyResult deepPoly( const Network &net, const InputDomain &domain,
                                const AlphaSet *alphas = nullptr, const BoundsState *prior = nullptr,
                                const LpSolver &solver = defaultLpSolver() )
{
    if ( domainDimension( domain ) != net.inputSize() )
        throw DimensionError( "input domain dimension does not match the network" );
    unsigned L = net.numLayers();
    DeepPolyResult result;
    BoundsState &b = result.bounds;
    b = emptyBounds( net );
    result.relax.layers.resize( L + 1 );

    Interval input = domainBox( domain, solver );
    b.pre[0] = input;
    b.post[0] = input;
    if ( prior && !prior->contradiction )
        for ( Eigen::Index j = 0; j < input.size(); ++j )
            if ( !detail::intersect( b.pre[0], j, prior->post[0].lower[j], prior->post[0].upper[j] ) )
                b.contradiction = true;
    b.post[0] = b.pre[0];
    if ( prior && prior->contradiction )
        b.contradiction = true;

    for ( unsigned k = 1; k <= L; ++k )
    {
        unsigned n = net.width( k );
        Matrix Au = Matrix::Identity( n, n );
        Vector cu = Vector::Zero( n );
        Matrix Al = Au;
        Vector cl = cu;
        backsubstituteRows( net, result.relax, Au, cu, k, 0, BoundDirection::Upper );
        backsubstituteRows( net, result.relax, Al, cl, k, 0, BoundDirection::Lower );
        Interval up = detail::rowsBox( Au, cu, domain, true, solver );
        Interval lo = detail::rowsBox( Al, cl, domain, false, solver );
        for ( unsigned j = 0; j < n; ++j )
        {
            b.pre[k].lower[j] = lo.lower[j];
            b.pre[k].upper[j] = up.upper[j];
            if ( b.pre[k].lower[j] > b.pre[k].upper[j] )
                std::swap( b.pre[k].lower[j], b.pre[k].upper[j] );
            if ( prior && !prior->contradiction &&
                 !detail::intersect( b.pre[k], j, prior->pre[k].lower[j], prior->pre[k].upper[j] ) )
                b.contradiction = true;
        }
        if ( b.contradiction )
        {
            // Keep shapes valid; the state is already decided.
            for ( unsigned i = k; i <= L; ++i )
            {
                if ( !result.relax.layers[i].lowerSlope.size() )
                    result.relax.layers[i] = identityRelax( net.width( i ) );
            }
            b.post[k] = b.pre[k];
            for ( unsigned i = k + 1; i <= L; ++i )
            {
                b.pre[i] = Interval::sized( net.width( i ) );
                b.post[i] = b.pre[i];
            }
            return result;
        }

        if ( k == L )
        {
            result.relax.layers[k] = identityRelax( n );
            b.post[k] = b.pre[k];
            break;
        }

        const Activation &act = net.layer( k ).activation;
        Vector alpha( n );
        for ( unsigned j = 0; j < n; ++j )
        {
            double a = ( alphas && ( *alphas )[k].size() == n ) ? ( *alphas )[k][j]
                                                                : std::numeric_limits<double>::quiet_NaN();
            alpha[j] = std::isnan( a ) ? defaultAlpha( act, b.pre[k].lower[j], b.pre[k].upper[j] ) : a;
        }
        result.relax.layers[k] = relaxLayer( act, b.pre[k], alpha );
        const LayerRelax &r = result.relax.layers[k];
        for ( unsigned j = 0; j < n; ++j )
        {
            double l = b.pre[k].lower[j];
            double u = b.pre[k].upper[j];
            double lowLine = std::min( r.lowerSlope[j] * l, r.lowerSlope[j] * u ) + r.lowerOffset[j];
            double upLine = std::max( r.upperSlope[j] * l, r.upperSlope[j] * u ) + r.upperOffset[j];
            b.post[k].lower[j] = lowLine;
            b.post[k].upper[j] = upLine;
            if ( prior && !prior->contradiction &&
                 !detail::intersect( b.post[k], j, prior->post[k].lower[j], prior->post[k].upper[j] ) )
                b.contradiction = true;
        }
        if ( b.contradiction )
        {
            for ( unsigned i = k + 1; i <= L; ++i )
            {
                result.relax.layers[i] = identityRelax( net.width( i ) );
                b.pre[i] = Interval::sized( net.width( i ) );
                b.post[i] = b.pre[i];
            }
            return result;
        }
    }
    return result;
}

// Textbook interval bound propagation.
inline BoundsState intervalBounds( const Network &net, const InputDomain &domain,
                                   const LpSolver &solver = defaultLpSolver() )
{
    BoundsState b = emptyBounds( net );
    b.pre[0] = domainBox( domain, solver );
    b.post[0] = b.pre[0];
    for ( unsigned k = 1; k <= net.numLayers(); ++k )
    {
        const Layer &layer = net.layer( k );
        Matrix pos = layer.weights.cwiseMax( 0.0 );
        Matrix neg = layer.weights.cwiseMin( 0.0 );
        b.pre[k].lower = pos * b.post[k - 1].lower + neg * b.post[k - 1].upper + layer.bias;
        b.pre[k].upper = pos * b.post[k - 1].upper + neg * b.post[k - 1].lower + layer.bias;
        b.post[k] = b.pre[k];
        for ( unsigned j = 0; j < net.width( k ); ++j )
        {
            auto [lo, hi] = activationImage( layer.activation, b.pre[k].lower[j], b.pre[k].upper[j] );
            b.post[k].lower[j] = lo;
            b.post[k].upper[j] = hi;
        }
    }
    return b;
}

// Number of unfixed piecewise-linear neurons under the given bounds.
inline unsigned countUnfixed( const Network &net, const BoundsState &bounds )
{
    unsigned count = 0;
    for ( unsigned i = 1; i < net.numLayers(); ++i )
        for ( unsigned j = 0; j < net.width( i ); ++j )
            if ( isUnfixed( net.layer( i ).activation, bounds.pre[i].lower[j], bounds.pre[i].upper[j] ) )
                ++count;
    return count;
}

} // namespace pmnr
