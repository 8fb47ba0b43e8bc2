#include "oracles.hpp"
#include "pmnr/lp_io.hpp"

#include <gtest/gtest.h>

using namespace pmnr;

namespace {

Vector vec( std::initializer_list<double> v )
{
    Vector out( v.size() );
    Eigen::Index k = 0;
    for ( double x : v )
        out[k++] = x;
    return out;
}

} // namespace

TEST( Simplex, MaxSingleBound )
{
    LinearProgram lp( 1 );
    lp.sense = Sense::Maximize;
    lp.objective = vec( { 1 } );
    lp.addConstraint( vec( { 1 } ), Relation::LessEqual, 3 );
    LpOutcome out = simplexSolve( lp );
    ASSERT_EQ( out.status, LpStatus::Optimal );
    EXPECT_NEAR( out.value, 3.0, 1e-9 );
}

TEST( Simplex, MinWithCoveringRow )
{
    LinearProgram lp( 2 );
    lp.objective = vec( { 1, 1 } );
    lp.lower = vec( { 0, 0 } );
    lp.upper = vec( { 1, 1 } );
    lp.addConstraint( vec( { 1, 1 } ), Relation::GreaterEqual, 2 );
    LpOutcome out = simplexSolve( lp );
    ASSERT_EQ( out.status, LpStatus::Optimal );
    EXPECT_NEAR( out.value, 2.0, 1e-9 );
    EXPECT_LE( maxViolation( lp, out.point ), 1e-7 );
}

TEST( Simplex, DetectsInfeasible )
{
    LinearProgram lp( 2 );
    lp.objective = vec( { 1, 0 } );
    lp.lower = vec( { 0, 0 } );
    lp.addConstraint( vec( { 1, 1 } ), Relation::LessEqual, -1 );
    EXPECT_EQ( simplexSolve( lp ).status, LpStatus::Infeasible );

    LinearProgram crossed( 1 );
    crossed.lower = vec( { 2 } );
    crossed.upper = vec( { 1 } );
    EXPECT_EQ( simplexSolve( crossed ).status, LpStatus::Infeasible );
}

TEST( Simplex, DetectsUnbounded )
{
    LinearProgram lp( 2 );
    lp.sense = Sense::Maximize;
    lp.objective = vec( { 1, 1 } );
    lp.addConstraint( vec( { 1, -1 } ), Relation::LessEqual, 1 );
    EXPECT_EQ( simplexSolve( lp ).status, LpStatus::Unbounded );
}

TEST( Simplex, FreeVariablesAndEqualities )
{
    // min x - y  s.t. x + y = 1, x - 2y >= -4, x free, y <= 3
    LinearProgram lp( 2 );
    lp.objective = vec( { 1, -1 } );
    lp.upper = vec( { kInfinity, 3 } );
    lp.addConstraint( vec( { 1, 1 } ), Relation::Equal, 1 );
    lp.addConstraint( vec( { 1, -2 } ), Relation::GreaterEqual, -4 );
    LpOutcome out = simplexSolve( lp );
    ASSERT_EQ( out.status, LpStatus::Optimal );
    // x = 1 - y, x - 2y >= -4 -> y <= 5/3; objective 1 - 2y minimal at y = 5/3.
    EXPECT_NEAR( out.value, 1.0 - 10.0 / 3.0, 1e-9 );
}

TEST( Simplex, DimensionMismatch )
{
    LinearProgram lp( 2 );
    lp.addConstraint( vec( { 1 } ), Relation::LessEqual, 1 );
    EXPECT_THROW( simplexSolve( lp ), DimensionError );
}

TEST( Simplex, IterationCapRaisesStall )
{
    LinearProgram lp( 2 );
    lp.sense = Sense::Maximize;
    lp.objective = vec( { 1, 1 } );
    lp.upper = vec( { 1, 1 } );
    lp.lower = vec( { 0, 0 } );
    SimplexOptions opts;
    opts.maxIterations = 0;
    EXPECT_THROW( simplexSolve( lp, opts ), LpStalled );
}

TEST( SimplexProperty, AgreesWithVertexEnumeration )
{
    std::mt19937_64 rng( 5 );
    std::uniform_real_distribution<double> coef( -3, 3 );
    std::uniform_int_distribution<int> dims( 1, 4 );
    std::uniform_int_distribution<int> rel( 0, 2 );
    int optimal = 0, infeasible = 0;
    for ( int trial = 0; trial < 400; ++trial )
    {
        unsigned n = dims( rng );
        unsigned m = dims( rng );
        LinearProgram lp( n );
        lp.sense = trial % 2 ? Sense::Maximize : Sense::Minimize;
        for ( unsigned j = 0; j < n; ++j )
        {
            lp.objective[j] = coef( rng );
            lp.lower[j] = -2.0 + coef( rng ) * 0.2;
            lp.upper[j] = 2.0 + coef( rng ) * 0.2;
            if ( trial % 5 == 0 && j == 0 )
                lp.lower[j] = -kInfinity; // still bounded through the upper bound side
        }
        if ( trial % 5 == 0 )
            lp.lower[0] = -10.0;
        for ( unsigned r = 0; r < m; ++r )
        {
            Vector a( n );
            for ( unsigned j = 0; j < n; ++j )
                a[j] = coef( rng );
            int k = rel( rng );
            Relation relation = k == 0 ? Relation::LessEqual : ( k == 1 ? Relation::GreaterEqual : Relation::Equal );
            lp.addConstraint( a, relation, coef( rng ) );
        }
        LpOutcome out = simplexSolve( lp );
        oracle::BruteResult brute = oracle::bruteForceLp( lp );
        if ( brute.feasible )
        {
            ASSERT_EQ( out.status, LpStatus::Optimal ) << "trial " << trial;
            EXPECT_NEAR( out.value, brute.value, 1e-7 ) << "trial " << trial;
            EXPECT_LE( maxViolation( lp, out.point ), 1e-7 );
            ++optimal;
        }
        else
        {
            EXPECT_EQ( out.status, LpStatus::Infeasible ) << "trial " << trial;
            ++infeasible;
        }
    }
    EXPECT_GT( optimal, 100 );
    EXPECT_GT( infeasible, 10 );
}

TEST( SimplexProperty, DegenerateProgramsTerminate )
{
    // Many redundant rows through the same vertex.
    LinearProgram lp( 3 );
    lp.sense = Sense::Maximize;
    lp.objective = vec( { 1, 1, 1 } );
    lp.lower = Vector::Zero( 3 );
    for ( int k = 1; k <= 20; ++k )
        lp.addConstraint( vec( { 1.0, double( k ), double( k * k ) } ), Relation::LessEqual, 0.0 );
    lp.addConstraint( vec( { 1, 0, 0 } ), Relation::LessEqual, 0.0 );
    LpOutcome out = simplexSolve( lp );
    ASSERT_EQ( out.status, LpStatus::Optimal );
    EXPECT_NEAR( out.value, 0.0, 1e-9 );
}

TEST( LpJson, RoundTripAndExternalFormat )
{
    LinearProgram lp( 2 );
    lp.sense = Sense::Maximize;
    lp.objective = vec( { 1, 2 } );
    lp.lower = vec( { 0, -kInfinity } );
    lp.upper = vec( { 1, 4 } );
    lp.addConstraint( vec( { 1, 1 } ), Relation::LessEqual, 3 );
    Json doc = lpToJson( lp );
    EXPECT_TRUE( doc["lower"][1].is_null() );
    LinearProgram again = lpFromJson( doc );
    EXPECT_EQ( again.lower[0], 0.0 );
    EXPECT_TRUE( std::isinf( again.lower[1] ) );
    EXPECT_EQ( simplexSolve( again ).value, simplexSolve( lp ).value );

    LpOutcome out = simplexSolve( lp );
    LpOutcome back = lpOutcomeFromJson( lpOutcomeToJson( out ) );
    EXPECT_EQ( back.status, LpStatus::Optimal );
    EXPECT_EQ( back.value, out.value );
}
