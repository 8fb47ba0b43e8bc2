#include "oracles.hpp"
#include "pmnr/post_tighten.hpp"

#include <gtest/gtest.h>

using namespace pmnr;

namespace {

InputDomain runningDomain()
{
    return oracle::runningBox();
}

double lpOutputMin( const Network &net, const BoundsState &b, const SingleRelax &relax,
                    const std::vector<HyperPlane> &planes, LpStatus *status = nullptr )
{
    LpEncoding enc = encodeRelaxed( net, b, { &relax }, planes, runningDomain() );
    enc.lp.objective.setZero();
    enc.lp.objective[enc.index( { VarKind::Pre, 3, 0 } )] = 1.0;
    LpOutcome out = simplexSolve( enc.lp );
    if ( status )
        *status = out.status;
    return out.value;
}

} // namespace

TEST( Encode, IdentityNetworkMatchesBox )
{
    Network net = parseNetwork( R"({"layers":[{"weights":[[2, -1]],"bias":[0.5],"activation":"identity"}]})" );
    Box box{ Vector::Constant( 2, -1 ), Vector::Constant( 2, 1 ) };
    DeepPolyResult dp = deepPoly( net, box );
    BoundsState wide = dp.bounds;
    wide.pre[1] = Interval::sized( 1 );
    LpEncoding enc = encodeRelaxed( net, wide, { &dp.relax }, {}, box );
    enc.lp.objective[enc.index( { VarKind::Pre, 1, 0 } )] = 1.0;
    EXPECT_NEAR( simplexSolve( enc.lp ).value, -2.5, 1e-9 );
}

TEST( Encode, RunningExampleRelaxedLpBracket )
{
    Network net = oracle::runningExample();
    DeepPolyResult dp = deepPoly( net, runningDomain() );
    double v = lpOutputMin( net, dp.bounds, dp.relax, {} );
    EXPECT_GE( v, -0.15 - 1e-9 );
    EXPECT_LE( v, 0.1 );
}

TEST( Encode, InfeasiblePlaneIsDetected )
{
    Network net = oracle::runningExample();
    DeepPolyResult dp = deepPoly( net, runningDomain() );
    // h(2,0) + h(2,1) >= 0 always holds; demanding <= -1 is infeasible.
    HyperPlane bad;
    bad.terms = { { { VarKind::Post, 2, 0 }, 1.0 }, { { VarKind::Post, 2, 1 }, 1.0 } };
    bad.bias = -1.0;
    LpStatus status;
    lpOutputMin( net, dp.bounds, dp.relax, { bad }, &status );
    EXPECT_EQ( status, LpStatus::Infeasible );
}

TEST( Encode, L1BallAuxiliaries )
{
    Network net = parseNetwork( R"({"layers":[{"weights":[[3, -4]],"bias":[0],"activation":"identity"}]})" );
    LpBall ball{ Vector::Zero( 2 ), 1.0, 1.0 };
    DeepPolyResult dp = deepPoly( net, ball );
    LpEncoding enc = encodeRelaxed( net, dp.bounds, { &dp.relax }, {}, ball );
    enc.lp.objective[enc.index( { VarKind::Pre, 1, 0 } )] = 1.0;
    EXPECT_NEAR( simplexSolve( enc.lp ).value, -4.0, 1e-9 );
}

TEST( PostTighten, NoPlanesIsAtLeastDeepPoly )
{
    Network net = oracle::runningExample();
    DeepPolyResult dp = deepPoly( net, runningDomain() );
    BoundsState t = postTighten( net, runningDomain(), false, dp.bounds, { &dp.relax }, {} );
    EXPECT_FALSE( t.contradiction );
    EXPECT_TRUE( dp.bounds.contains( t, 0.0 ) );
    // The LP drops the upper bound well below DeepPoly's 40.1.
    EXPECT_LT( t.output().upper[0], 40.1 );
}

TEST( PostTighten, OutputContradiction )
{
    Network net = oracle::runningExample();
    DeepPolyResult dp = deepPoly( net, runningDomain() );
    // Asking for an output of at least 27 is infeasible.
    std::vector<Layer> layers = net.layers();
    layers.back().bias[0] -= 27.0;
    Network shifted( layers );
    DeepPolyResult sdp = deepPoly( shifted, runningDomain() );
    BoundsState t = postTighten( shifted, runningDomain(), true, sdp.bounds, { &sdp.relax }, {} );
    EXPECT_TRUE( t.contradiction );
}

TEST( PostTightenProperty, SoundAndShrinking )
{
    std::mt19937_64 rng( 17 );
    for ( int trial = 0; trial < 30; ++trial )
    {
        Network net = oracle::randomNetwork( rng );
        Box box{ Vector::Constant( 2, -1 ), Vector::Constant( 2, 1 ) };
        DeepPolyResult dp = deepPoly( net, box );
        BoundsState t = postTighten( net, box, false, dp.bounds, { &dp.relax }, {} );
        ASSERT_FALSE( t.contradiction );
        EXPECT_TRUE( dp.bounds.contains( t, 0.0 ) );
        for ( const Vector &x : oracle::boxSamples( rng, box.lower, box.upper, 10000 ) )
        {
            Trace tr = forward( net, x );
            for ( unsigned i = 1; i <= net.numLayers(); ++i )
            {
                ASSERT_LE( ( t.pre[i].lower - tr.pre[i] ).maxCoeff(), 1e-7 );
                ASSERT_LE( ( tr.pre[i] - t.pre[i].upper ).maxCoeff(), 1e-7 );
                ASSERT_LE( ( t.post[i].lower - tr.post[i] ).maxCoeff(), 1e-7 );
                ASSERT_LE( ( tr.post[i] - t.post[i].upper ).maxCoeff(), 1e-7 );
            }
        }
    }
}
