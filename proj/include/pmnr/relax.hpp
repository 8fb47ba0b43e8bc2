#pragma once

#include "pmnr/network.hpp"

#include <vector>

namespace pmnr {

// lowerSlope*x + lowerOffset <= sigma(x) <= upperSlope*x + upperOffset on [l,u].
struct NeuronRelax
{
    double lowerSlope = 1.0;
    double lowerOffset = 0.0;
    double upperSlope = 1.0;
    double upperOffset = 0.0;

    double lower( double x ) const
    {
        return lowerSlope * x + lowerOffset;
    }
    double upper( double x ) const
    {
        return upperSlope * x + upperOffset;
    }
};

struct Phase
{
    unsigned id = 0;
    double preLower = 0.0;
    double preUpper = 0.0;
    NeuronRelax exact;
};

inline bool isUnfixed( const Activation &activation, double l, double u )
{
    if ( l > u )
        throw PreconditionError( "lower bound exceeds upper bound" );
    if ( !activation.isPiecewiseLinear() )
        return false;
    return l < 0.0 && u > 0.0;
}

// Admissible range of the lower slope of an unfixed neuron.
inline std::pair<double, double> alphaRange( const Activation &activation )
{
    switch ( activation.type )
    {
    case ActivationType::Relu:
        return { 0.0, 1.0 };
    case ActivationType::LeakyRelu:
        return { activation.slope, 1.0 };
    case ActivationType::Abs:
        return { -1.0, 1.0 };
    case ActivationType::Identity:
        return { 1.0, 1.0 };
    }
    return { 1.0, 1.0 };
}

inline double clampAlpha( const Activation &activation, double alpha )
{
    auto [lo, hi] = alphaRange( activation );
    return std::clamp( alpha, lo, hi );
}

// Minimal-area rule: keep the lower line closest to the chord.
inline double defaultAlpha( const Activation &activation, double l, double u )
{
    switch ( activation.type )
    {
    case ActivationType::Relu:
        return u >= -l ? 1.0 : 0.0;
    case ActivationType::LeakyRelu:
        return u >= -l ? 1.0 : activation.slope;
    case ActivationType::Abs:
        return 0.0;
    case ActivationType::Identity:
        return 1.0;
    }
    return 1.0;
}

inline NeuronRelax linearPiece( double slope )
{
    return { slope, 0.0, slope, 0.0 };
}

inline NeuronRelax relaxNeuron( const Activation &activation, double l, double u, double alpha )
{
    if ( l > u )
        throw PreconditionError( "lower bound exceeds upper bound" );
    if ( activation.type == ActivationType::Identity )
        return linearPiece( 1.0 );

    double negSlope = 0.0;
    if ( activation.type == ActivationType::LeakyRelu )
        negSlope = activation.slope;
    else if ( activation.type == ActivationType::Abs )
        negSlope = -1.0;

    if ( u <= 0.0 )
        return linearPiece( negSlope );
    if ( l >= 0.0 )
        return linearPiece( 1.0 );

    auto [lo, hi] = alphaRange( activation );
    if ( alpha < lo - 1e-12 || alpha > hi + 1e-12 )
        throw PreconditionError( "alpha " + std::to_string( alpha ) + " outside [" +
                                 std::to_string( lo ) + ", " + std::to_string( hi ) + "]" );
    alpha = std::clamp( alpha, lo, hi );

    NeuronRelax r;
    r.lowerSlope = alpha;
    r.lowerOffset = 0.0;
    if ( activation.type == ActivationType::Abs )
    {
        r.upperSlope = 0.0;
        r.upperOffset = std::max( -l, u );
    }
    else
    {
        // Chord through (l, negSlope*l) and (u, u).
        double slope = ( u - negSlope * l ) / ( u - l );
        r.upperSlope = slope;
        r.upperOffset = u - slope * u;
    }
    return r;
}

inline std::vector<Phase> phases( const Activation &activation, double l, double u )
{
    if ( l > u )
        throw PreconditionError( "lower bound exceeds upper bound" );
    if ( !isUnfixed( activation, l, u ) )
        return { Phase{ 0, l, u, relaxNeuron( activation, l, u, defaultAlpha( activation, l, u ) ) } };

    double negSlope = activation.type == ActivationType::Abs
                          ? -1.0
                          : ( activation.type == ActivationType::LeakyRelu ? activation.slope : 0.0 );
    return { Phase{ 0, l, 0.0, linearPiece( negSlope ) }, Phase{ 1, 0.0, u, linearPiece( 1.0 ) } };
}

// Image of [l,u] under the activation.
inline std::pair<double, double> activationImage( const Activation &activation, double l, double u )
{
    if ( activation.type == ActivationType::Abs )
    {
        if ( l >= 0 )
            return { l, u };
        if ( u <= 0 )
            return { -u, -l };
        return { 0.0, std::max( -l, u ) };
    }
    return { activation( l ), activation( u ) };
}

} // namespace pmnr
