#include "oracles.hpp"
#include "pmnr/pmnr.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pmnr;

namespace {

struct RunningSetup
{
    Query query = oracle::runningQuery();
    Network net = query.canonicalNetwork();
    DeepPolyResult dp = deepPoly( net, query.input );
};

// LHS of a plane at a hand-computed trace of the running example.
double planeAt( const HyperPlane &p, const oracle::RunningTrace &t )
{
    double v = 0.0;
    for ( const Term &term : p.terms )
    {
        const VarRef &r = term.var;
        double value = 0.0;
        if ( r.layer == 1 )
            value = r.kind == VarKind::Pre ? t.x1[r.index] : t.h1[r.index];
        else if ( r.layer == 2 )
            value = r.kind == VarKind::Pre ? t.x2[r.index] : t.h2[r.index];
        else
            ADD_FAILURE() << "unexpected variable " << varName( r );
        v += term.coeff * value;
    }
    return v;
}

double worstPlaneViolation( const std::vector<HyperPlane> &planes, unsigned samples )
{
    std::mt19937_64 rng( 11 );
    double worst = -kInfinity;
    for ( const Vector &x : oracle::boxSamples( rng, Vector::Constant( 2, -1 ), Vector::Constant( 2, 1 ), samples ) )
    {
        oracle::RunningTrace t = oracle::runningTrace( x[0], x[1] );
        for ( const HyperPlane &p : planes )
            worst = std::max( worst, planeAt( p, t ) - p.bias );
    }
    return worst;
}

NeuronGroup layerGroup( unsigned layer, std::vector<unsigned> neurons )
{
    return { layer, std::move( neurons ), {} };
}

PmnrConfig walkthroughConfig( Variant variant )
{
    PmnrConfig cfg;
    cfg.variant = variant;
    cfg.iterations = 1;
    cfg.score = ScoreKind::Range;
    return cfg;
}

bool boxInside( const BoundsState &outer, const BoundsState &inner, double tol )
{
    return outer.contains( inner, tol );
}

} // namespace

TEST( Scores, RangeScoresOfRunningExample )
{
    RunningSetup s;
    std::vector<NeuronScore> scores = nsseScores( s.net, s.dp.bounds, s.dp.relax, ScoreKind::Range );
    ASSERT_EQ( scores.size(), 4u );
    const double expected[4][3] = { { 1, 1, 10 }, { 1, 2, 2 }, { 2, 0, 8 }, { 2, 1, 12 } };
    for ( int k = 0; k < 4; ++k )
    {
        EXPECT_EQ( scores[k].layer, unsigned( expected[k][0] ) );
        EXPECT_EQ( scores[k].index, unsigned( expected[k][1] ) );
        EXPECT_NEAR( scores[k].score, expected[k][2], 1e-12 );
    }
    auto group = selectNeurons( s.net, scores, 2 );
    ASSERT_TRUE( group.has_value() );
    EXPECT_EQ( group->layer, 2u );
    EXPECT_EQ( group->neurons, ( std::vector<unsigned>{ 0, 1 } ) );
}

TEST( Scores, NsseScoresAreFiniteAndNonnegative )
{
    std::mt19937_64 rng( 5 );
    for ( int trial = 0; trial < 100; ++trial )
    {
        Network net = oracle::randomNetwork( rng );
        Box box{ Vector::Constant( 2, -1 ), Vector::Constant( 2, 1 ) };
        DeepPolyResult dp = deepPoly( net, box );
        for ( const NeuronScore &sc : nsseScores( net, dp.bounds, dp.relax ) )
        {
            EXPECT_TRUE( std::isfinite( sc.score ) );
            EXPECT_GE( sc.score, 0.0 );
        }
    }
}

TEST( Scores, AllFixedNetworkHasNoScores )
{
    RunningSetup s;
    Box tiny{ Vector::Constant( 2, 0.39 ), Vector::Constant( 2, 0.41 ) };
    tiny.lower[1] = -0.61;
    tiny.upper[1] = -0.59;
    DeepPolyResult dp = deepPoly( s.net, tiny );
    EXPECT_TRUE( nsseScores( s.net, dp.bounds, dp.relax ).empty() );
    EXPECT_FALSE( selectNeurons( s.net, {}, 2 ).has_value() );
}

TEST( Select, SingleUnfixedNeuronGivesGroupOfOne )
{
    RunningSetup s;
    std::vector<NeuronScore> scores = { { 1, 2, 3.0 } };
    auto g = selectNeurons( s.net, scores, 2 );
    ASSERT_TRUE( g );
    EXPECT_EQ( g->neurons.size(), 1u );
}

TEST( Select, TiesBreakToLowerIndex )
{
    RunningSetup s;
    std::vector<NeuronScore> scores = { { 1, 0, 1.0 }, { 1, 1, 5.0 }, { 1, 2, 5.0 }, { 1, 3, 5.0 } };
    auto g = selectNeurons( s.net, scores, 2 );
    EXPECT_EQ( g->neurons, ( std::vector<unsigned>{ 1, 2 } ) );
}

TEST( Select, RandomVariantIsReproducible )
{
    RunningSetup s;
    std::vector<NeuronScore> scores = nsseScores( s.net, s.dp.bounds, s.dp.relax );
    for ( std::uint64_t seed = 0; seed < 20; ++seed )
    {
        auto a = selectNeurons( s.net, scores, 2, Variant::PmnrRandom, seed );
        auto b = selectNeurons( s.net, scores, 2, Variant::PmnrRandom, seed );
        EXPECT_EQ( a->layer, b->layer );
        EXPECT_EQ( a->neurons, b->neurons );
        EXPECT_EQ( a->neurons.size(), 2u );
    }
}

TEST( Epsilons, CountsMatchClosedForm )
{
    EXPECT_EQ( enumerateEpsilons( 2 ).size(), 4u );
    EXPECT_EQ( enumerateEpsilons( 3 ).size(), 20u );
    EXPECT_EQ( enumerateEpsilons( 4 ).size(), 72u );
    for ( unsigned d = 2; d <= 6; ++d )
    {
        auto eps = enumerateEpsilons( d );
        unsigned expected = static_cast<unsigned>( std::pow( 3, d ) ) - 2 * d - 1;
        EXPECT_EQ( eps.size(), expected );
        std::set<std::vector<int>> unique( eps.begin(), eps.end() );
        EXPECT_EQ( unique.size(), eps.size() );
        for ( const auto &e : eps )
            EXPECT_GE( std::count_if( e.begin(), e.end(), []( int v ) { return v != 0; } ), 2 );
    }
    EXPECT_THROW( enumerateEpsilons( 1 ), PreconditionError );
}

TEST( Epsilons, OrderForPairs )
{
    auto eps = enumerateEpsilons( 2 );
    std::vector<std::vector<int>> expected = { { 1, 1 }, { -1, 1 }, { 1, -1 }, { -1, -1 } };
    EXPECT_EQ( eps, expected );
}

TEST( InitialPlanes, LayerTwoTemplates )
{
    RunningSetup s;
    auto planes = initialPlanes( s.net, s.dp.bounds, s.dp.relax, layerGroup( 2, { 0, 1 } ), enumerateEpsilons( 2 ) );
    ASSERT_EQ( planes.size(), 8u );
    for ( const PlaneCandidate &c : planes )
    {
        const Provenance &pv = c.plane.provenance;
        double s0 = pv.tmpl == PlaneTemplate::Upper ? 7.0 / 8.0 : 1.0;
        double s1 = pv.tmpl == PlaneTemplate::Upper ? 7.0 / 12.0 : 1.0;
        std::vector<Term> expected = canonicalTerms( {
            { { VarKind::Post, 2, 0 }, double( pv.epsilon[0] ) },
            { { VarKind::Post, 2, 1 }, double( pv.epsilon[1] ) },
            { { VarKind::Pre, 2, 0 }, -pv.epsilon[0] * s0 },
            { { VarKind::Pre, 2, 1 }, -pv.epsilon[1] * s1 },
        } );
        ASSERT_EQ( c.plane.terms.size(), expected.size() );
        for ( size_t k = 0; k < expected.size(); ++k )
        {
            EXPECT_EQ( c.plane.terms[k].var, expected[k].var );
            EXPECT_NEAR( c.plane.terms[k].coeff, expected[k].coeff, 1e-15 );
        }
        EXPECT_EQ( c.plane.activationTerms(), 2u );
    }
    // h(2,0)+h(2,1)-x(2,0)-x(2,1): 7 + 7 + 1 + 5 by interval arithmetic.
    EXPECT_NEAR( planes[0].feasUpper, 20.0, 1e-9 );
}

TEST( InitialPlanes, AbsPairDropsPreActivationTerms )
{
    RunningSetup s;
    auto planes = initialPlanes( s.net, s.dp.bounds, s.dp.relax, layerGroup( 1, { 1, 2 } ), enumerateEpsilons( 2 ) );
    ASSERT_EQ( planes.size(), 4u );
    for ( const PlaneCandidate &c : planes )
        for ( const Term &t : c.plane.terms )
            EXPECT_EQ( t.var.kind, VarKind::Post );
    const double feas[4] = { 6, 0, 1, 5 };
    for ( int k = 0; k < 4; ++k )
        EXPECT_NEAR( planes[k].feasUpper, feas[k], 1e-12 );
}

TEST( Generate, RunningExamplePlanesMatchReference )
{
    RunningSetup s;
    PmnrConfig cfg;
    GenerateResult gen = generatePmnr( s.net, s.query.input, s.dp.bounds, s.dp.relax, layerGroup( 2, { 0, 1 } ), {}, cfg );
    ASSERT_EQ( gen.planes.size(), 8u );
    const double reference[8] = { 20, 2.46, 5.14, 2.99, 1.02, 3.07, 0, 3.54 };
    for ( int k = 0; k < 8; ++k )
        EXPECT_LE( gen.planes[k].bias, reference[k] + 0.1 ) << "plane " << k;
    EXPECT_LE( worstPlaneViolation( gen.planes, 10000 ), 1e-7 );
    EXPECT_EQ( gen.dualSolves, 8u * 5u );
}

TEST( Generate, PlanesStaySoundWithBranchRestriction )
{
    RunningSetup s;
    PmnrConfig cfg;
    cfg.restrictBranches = true;
    GenerateResult gen = generatePmnr( s.net, s.query.input, s.dp.bounds, s.dp.relax, layerGroup( 1, { 1, 2 } ), {}, cfg );
    EXPECT_LE( worstPlaneViolation( gen.planes, 10000 ), 1e-7 );
}

TEST( Generate, GroupOfOneYieldsNothing )
{
    RunningSetup s;
    GenerateResult gen = generatePmnr( s.net, s.query.input, s.dp.bounds, s.dp.relax, layerGroup( 2, { 1 } ), {}, {} );
    EXPECT_TRUE( gen.planes.empty() );
}

TEST( Groups, AllGroupsOfRunningExample )
{
    RunningSetup s;
    auto groups = pmnrAllGroups( s.net, s.dp.bounds, 2 );
    ASSERT_EQ( groups.size(), 2u );
    EXPECT_EQ( groups[0].layer, 1u );
    EXPECT_EQ( groups[0].neurons, ( std::vector<unsigned>{ 1, 2 } ) );
    EXPECT_EQ( groups[1].layer, 2u );
    EXPECT_EQ( groups[1].neurons, ( std::vector<unsigned>{ 0, 1 } ) );
}

TEST( Groups, WindowCount )
{
    Network net = parseNetwork( R"({"layers":[
        {"weights":[[1,0],[0,1],[1,1],[1,-1],[2,1]],"bias":[0,0,0,0,5],"activation":"relu"},
        {"weights":[[1,1,1,1,1]],"bias":[0],"activation":"identity"}]})" );
    Box box{ Vector::Constant( 2, -1 ), Vector::Constant( 2, 1 ) };
    DeepPolyResult dp = deepPoly( net, box );
    auto groups = pmnrAllGroups( net, dp.bounds, 2 );
    EXPECT_EQ( groups.size(), 3u );
    BoundsState one = dp.bounds;
    for ( unsigned j = 1; j < 4; ++j )
        one.pre[1].lower[j] = 0.0;
    EXPECT_TRUE( pmnrAllGroups( net, one, 2 ).empty() );
}

TEST( Alphas, RunningExampleSelectKeepsDefaults )
{
    RunningSetup s;
    AlphaChoice a = pickAlphas( s.net, s.query.input, s.dp.bounds, s.dp.relax, BoundDirection::Upper );
    EXPECT_EQ( a.select[2][0], 1.0 );
    EXPECT_EQ( a.select[2][1], 1.0 );
    EXPECT_EQ( a.gener[2], a.select[2] );
}

TEST( Alphas, FinalNeverWorseThanInitial )
{
    std::mt19937_64 rng( 21 );
    for ( int trial = 0; trial < 50; ++trial )
    {
        Network net = oracle::randomNetwork( rng );
        Box box{ Vector::Constant( 2, -1 ), Vector::Constant( 2, 1 ) };
        DeepPolyResult dp = deepPoly( net, box );
        for ( BoundDirection dir : { BoundDirection::Lower, BoundDirection::Upper } )
        {
            AlphaChoice a = pickAlphas( net, box, dp.bounds, dp.relax, dir );
            SingleRelax initial = buildRelax( net, dp.bounds, a.select );
            SingleRelax final = buildRelax( net, dp.bounds, a.final );
            unsigned L = net.numLayers();
            SymbolicBound target{ L, Vector::Ones( 1 ), 0.0, dir };
            double before = concretize( backsubstitute( net, initial, target, 0 ), box );
            double after = concretize( backsubstitute( net, final, target, 0 ), box );
            if ( dir == BoundDirection::Lower )
                EXPECT_GE( after, before - 1e-9 );
            else
                EXPECT_LE( after, before + 1e-9 );
        }
    }
}

TEST( Alphas, AllFixedNetworkUnchanged )
{
    RunningSetup s;
    Box tiny{ Vector( 2 ), Vector( 2 ) };
    tiny.lower << 0.39, -0.61;
    tiny.upper << 0.41, -0.59;
    DeepPolyResult dp = deepPoly( s.net, tiny );
    AlphaChoice a = pickAlphas( s.net, tiny, dp.bounds, dp.relax, BoundDirection::Upper );
    for ( unsigned i = 1; i < s.net.numLayers(); ++i )
        EXPECT_EQ( a.final[i], a.select[i] );
}

TEST( Loop, RunningExampleWithoutOutputDomain )
{
    Query q = oracle::runningQuery();
    PmnrResult r = pmnrLoop( q, walkthroughConfig( Variant::Pmnr ), false );
    ASSERT_FALSE( r.contradiction() );
    Interval out = originalOutputInterval( q, r.bounds.output() );
    EXPECT_NEAR( out.lower[0], 0.1, 0.05 );
    EXPECT_NEAR( out.upper[0], 26.1, 0.05 );
    EXPECT_NEAR( r.bounds.post[2].lower[0], 0.0, 1e-9 );
    EXPECT_NEAR( r.bounds.post[2].lower[1], 0.0, 1e-9 );
    EXPECT_EQ( r.planes.size(), 8u );
}

TEST( Loop, RunningExampleReachesContradiction )
{
    Query q = oracle::runningQuery();
    PmnrResult r = pmnrLoop( q, walkthroughConfig( Variant::Pmnr ), true );
    EXPECT_TRUE( r.contradiction() );
    PmnrResult more = pmnrLoop( q, PmnrConfig{}, true );
    EXPECT_TRUE( more.contradiction() );
}

TEST( Loop, AllVariantOnRunningExample )
{
    Query q = oracle::runningQuery();
    PmnrResult all = pmnrLoop( q, walkthroughConfig( Variant::PmnrAll ), false );
    ASSERT_EQ( all.planes.size(), 12u );
    const double layerOne[4] = { 6, 0, 1, 5 };
    for ( int k = 0; k < 4; ++k )
    {
        EXPECT_EQ( all.planes[k].provenance.groupLayer, 1u );
        EXPECT_NEAR( all.planes[k].bias, layerOne[k], 0.05 );
    }
    PmnrResult one = pmnrLoop( q, walkthroughConfig( Variant::Pmnr ), false );
    Interval a = originalOutputInterval( q, all.bounds.output() );
    Interval b = originalOutputInterval( q, one.bounds.output() );
    EXPECT_NEAR( a.lower[0], b.lower[0], 0.05 );
    EXPECT_NEAR( a.upper[0], b.upper[0], 0.05 );
    EXPECT_TRUE( pmnrLoop( q, walkthroughConfig( Variant::PmnrAll ), true ).contradiction() );
}

TEST( Loop, FbcAtLeastAsTightAsDeepPoly )
{
    RunningSetup s;
    PmnrResult r = fbcTighten( s.net, s.query.input, false );
    EXPECT_TRUE( boxInside( s.dp.bounds, r.bounds, 1e-9 ) );
    Interval out = originalOutputInterval( s.query, r.bounds.output() );
    EXPECT_GE( out.lower[0], -0.15 - 1e-9 );
    EXPECT_LE( out.upper[0], 40.1 + 1e-9 );
}

TEST( Loop, FbcFixpointOnIdentityNetwork )
{
    Network net = parseNetwork( R"({"layers":[{"weights":[[2, -1]],"bias":[0.5],"activation":"identity"}]})" );
    Box box{ Vector::Constant( 2, -1 ), Vector::Constant( 2, 1 ) };
    PmnrResult r = fbcTighten( net, box, false );
    EXPECT_NEAR( r.bounds.output().lower[0], -2.5, 1e-7 );
    EXPECT_NEAR( r.bounds.output().upper[0], 3.5, 1e-7 );
    EXPECT_EQ( r.iterations, 1u );
}

TEST( Loop, RandomNetworksSoundAndNested )
{
    std::mt19937_64 rng( 99 );
    oracle::RandomNetSpec spec;
    spec.maxLayers = 3;
    spec.maxWidth = 4;
    for ( int trial = 0; trial < 15; ++trial )
    {
        Network net = oracle::randomNetwork( rng, spec );
        Box box{ Vector::Constant( 2, -1 ), Vector::Constant( 2, 1 ) };
        DeepPolyResult dp = deepPoly( net, box );
        PmnrConfig one;
        one.iterations = 1;
        PmnrConfig ten;
        ten.iterations = 10;
        PmnrResult r1 = pmnrLoop( net, box, false, one );
        PmnrResult r10 = pmnrLoop( net, box, false, ten );
        ASSERT_FALSE( r10.contradiction() );
        EXPECT_TRUE( boxInside( dp.bounds, r1.bounds, 1e-9 ) ) << trial;
        EXPECT_TRUE( boxInside( r1.bounds, r10.bounds, 1e-9 ) ) << trial;
        for ( const Vector &x : oracle::boxSamples( rng, box.lower, box.upper, 2000 ) )
        {
            Trace t = forward( net, x );
            for ( unsigned i = 1; i <= net.numLayers(); ++i )
                for ( unsigned j = 0; j < net.width( i ); ++j )
                {
                    EXPECT_GE( t.pre[i][j], r10.bounds.pre[i].lower[j] - 1e-7 );
                    EXPECT_LE( t.pre[i][j], r10.bounds.pre[i].upper[j] + 1e-7 );
                }
            for ( const HyperPlane &p : r10.planes )
                EXPECT_LE( p.evaluate( t.pre, t.post ), p.bias + 1e-7 );
        }
    }
}

TEST( Loop, Deterministic )
{
    std::mt19937_64 rng( 3 );
    Network net = oracle::randomNetwork( rng );
    Box box{ Vector::Constant( 2, -1 ), Vector::Constant( 2, 1 ) };
    for ( Variant v : { Variant::Pmnr, Variant::PmnrRandom } )
    {
        PmnrConfig cfg;
        cfg.variant = v;
        cfg.seed = 17;
        PmnrResult a = pmnrLoop( net, box, false, cfg );
        PmnrResult b = pmnrLoop( net, box, false, cfg );
        ASSERT_EQ( a.planes.size(), b.planes.size() );
        for ( size_t k = 0; k < a.planes.size(); ++k )
        {
            EXPECT_EQ( a.planes[k].bias, b.planes[k].bias );
            EXPECT_EQ( a.planes[k].terms, b.planes[k].terms );
        }
        for ( size_t i = 0; i < a.bounds.pre.size(); ++i )
        {
            EXPECT_EQ( a.bounds.pre[i].lower, b.bounds.pre[i].lower );
            EXPECT_EQ( a.bounds.pre[i].upper, b.bounds.pre[i].upper );
        }
    }
}

TEST( Loop, RejectsBadConfig )
{
    RunningSetup s;
    PmnrConfig cfg;
    cfg.groupSize = 1;
    EXPECT_THROW( pmnrLoop( s.net, s.query.input, false, cfg ), PreconditionError );
    cfg.groupSize = 2;
    cfg.iterations = 0;
    EXPECT_THROW( pmnrLoop( s.net, s.query.input, false, cfg ), PreconditionError );
}
