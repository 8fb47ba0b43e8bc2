#pragma once

#include "pmnr/network.hpp"

#include <random>

namespace pmnr {

struct RandomSpec
{
    unsigned inputs = 2;
    unsigned minLayers = 2; // including the output layer
    unsigned maxLayers = 3;
    unsigned minWidth = 2;
    unsigned maxWidth = 4;
    bool mixedActivations = true;
    double radius = 1.0;
    double weightScale = 1.0;
};

inline Network randomNetwork( std::mt19937_64 &rng, const RandomSpec &spec = {} )
{
    if ( spec.minLayers < 1 || spec.minLayers > spec.maxLayers || spec.minWidth < 1 || spec.minWidth > spec.maxWidth )
        throw PreconditionError( "inconsistent random network spec" );
    std::uniform_int_distribution<unsigned> depth( spec.minLayers, spec.maxLayers );
    std::uniform_int_distribution<unsigned> width( spec.minWidth, spec.maxWidth );
    std::normal_distribution<double> gauss( 0.0, spec.weightScale );
    std::uniform_int_distribution<int> kind( 0, 5 );
    unsigned L = depth( rng );
    std::vector<Layer> layers;
    unsigned prev = spec.inputs;
    for ( unsigned i = 1; i <= L; ++i )
    {
        unsigned n = i == L ? 1 : width( rng );
        Layer layer;
        layer.weights = Matrix( n, prev );
        layer.bias = Vector( n );
        for ( unsigned r = 0; r < n; ++r )
        {
            for ( unsigned c = 0; c < prev; ++c )
                layer.weights( r, c ) = gauss( rng );
            layer.bias[r] = 0.5 * gauss( rng );
        }
        if ( i == L )
            layer.activation = Activation::identity();
        else if ( !spec.mixedActivations )
            layer.activation = Activation::relu();
        else
        {
            int k = kind( rng );
            if ( k == 4 )
                layer.activation = Activation::abs();
            else if ( k == 5 )
                layer.activation = Activation::leakyRelu( 0.1 );
            else
                layer.activation = Activation::relu();
        }
        layers.push_back( std::move( layer ) );
        prev = n;
    }
    return Network( std::move( layers ) );
}

/*
  Box query around the origin. The threshold sits near the largest sampled
  output in the unsafe direction, shifted by a random fraction of the
  sampled spread, so both verdicts occur.
*/
inline Query randomQuery( std::mt19937_64 &rng, const RandomSpec &spec = {} )
{
    Query q;
    q.network = randomNetwork( rng, spec );
    Box box{ Vector::Constant( spec.inputs, -spec.radius ), Vector::Constant( spec.inputs, spec.radius ) };
    q.input = box;
    std::uniform_real_distribution<double> unit( -1.0, 1.0 );
    double lo = kInfinity;
    double hi = -kInfinity;
    for ( int s = 0; s < 200; ++s )
    {
        Vector x( spec.inputs );
        for ( unsigned j = 0; j < spec.inputs; ++j )
            x[j] = spec.radius * unit( rng );
        double y = evaluate( q.network, x )[0];
        lo = std::min( lo, y );
        hi = std::max( hi, y );
    }
    double spread = std::max( hi - lo, 1e-3 );
    std::uniform_real_distribution<double> shift( -0.1, 0.5 );
    bool greater = std::bernoulli_distribution( 0.5 )( rng );
    q.output.direction = greater ? OutputDirection::Greater : OutputDirection::Less;
    q.output.threshold = greater ? hi + shift( rng ) * spread : lo - shift( rng ) * spread;
    return q;
}

} // namespace pmnr
