#include "oracles.hpp"
#include "pmnr/bench.hpp"
#include "pmnr/random_net.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace pmnr;
namespace fs = std::filesystem;

namespace {

fs::path scratchDir( const std::string &name )
{
    fs::path dir = fs::temp_directory_path() / ( "pmnr_test_" + name );
    fs::remove_all( dir );
    fs::create_directories( dir );
    return dir;
}

std::vector<std::string> lines( const std::string &text )
{
    std::vector<std::string> out;
    std::istringstream in( text );
    for ( std::string line; std::getline( in, line ); )
        out.push_back( line );
    return out;
}

} // namespace

TEST( Io, MethodNamesRoundTrip )
{
    for ( const auto &[name, m] : methodTable() )
    {
        EXPECT_EQ( parseMethod( name ), m );
        EXPECT_EQ( methodName( m ), name );
    }
    EXPECT_THROW( parseMethod( "crown" ), ParseError );
}

TEST( Io, BoundsRoundTripWithInfinities )
{
    Network net = oracle::runningExample();
    BoundsState b = deepPoly( net, oracle::runningBox() ).bounds;
    b.post[1].upper[2] = kInfinity;
    Json doc = boundsToJson( b );
    EXPECT_TRUE( doc["post"][1][2][1].is_null() );
    EXPECT_EQ( doc["pre"][0], doc["post"][0] );
    BoundsState back = boundsFromJson( Json::parse( doc.dump() ) );
    ASSERT_EQ( back.pre.size(), b.pre.size() );
    EXPECT_TRUE( b.contains( back, 0.0 ) );
    EXPECT_TRUE( back.contains( b, 0.0 ) );
    EXPECT_DOUBLE_EQ( back.pre[3].upper[0], 40.1 );
    EXPECT_THROW( boundsFromJson( Json::parse( R"({"pre":[[[0,1]]],"post":[]})" ) ), ParseError );
    EXPECT_THROW( boundsFromJson( Json::parse( R"({"pre":[[[0]]],"post":[[[0,1]]]})" ) ), ParseError );
}

TEST( Io, PlanesJsonCarriesProvenanceAndBranches )
{
    Query q = oracle::runningQuery();
    PmnrConfig cfg;
    cfg.iterations = 1;
    PmnrResult r = pmnrLoop( q.canonicalNetwork(), q.input, false, cfg );
    BranchCombination dead{ 2, { 0, 1 }, { 0, 1 } };
    Json doc = planesToJson( r.planes, { dead } );
    ASSERT_EQ( doc["planes"].size(), r.planes.size() );
    const Json &p = doc["planes"][0];
    EXPECT_EQ( p["provenance"]["layer"], r.planes[0].provenance.groupLayer );
    EXPECT_EQ( p["provenance"]["epsilon"].size(), 2u );
    EXPECT_TRUE( p["provenance"]["template"] == "lower" || p["provenance"]["template"] == "upper" );
    EXPECT_DOUBLE_EQ( p["bias"].get<double>(), r.planes[0].bias );
    EXPECT_EQ( p["terms"].size(), r.planes[0].terms.size() );
    EXPECT_EQ( doc["infeasible"][0]["phases"], Json::parse( "[0,1]" ) );
}

TEST( Io, VerdictJson )
{
    Verdict v;
    v.status = VerdictStatus::Sat;
    v.witness = Vector::Constant( 2, 0.5 );
    v.stats.subproblems = 3;
    Json doc = verdictToJson( v );
    EXPECT_EQ( doc["status"], "SAT" );
    EXPECT_EQ( doc["witness"].size(), 2u );
    EXPECT_EQ( doc["subproblems"], 3 );
    EXPECT_FALSE( doc.contains( "reason" ) );
}

TEST( Bench, EmptyManifestGivesHeaderOnly )
{
    BenchManifest m = manifestFromJson( Json::parse( R"({"entries": []})" ), "." );
    BenchReport r = runBenchmark( m );
    EXPECT_EQ( reportCsv( r ), "name,method,status,wall_time,subproblems,tighten_calls,note\n" );
    EXPECT_TRUE( reportSummary( r ).empty() );
}

TEST( Bench, RunningExampleRow )
{
    fs::path data = PMNR_DATA_DIR;
    Json doc = { { "methods", { "deeppoly", "pmnr" } },
                 { "entries",
                   { { { "name", "running" },
                       { "net", ( data / "running_example/net.json" ).string() },
                       { "query", ( data / "running_example/query.json" ).string() } } } } };
    BenchReport r = runBenchmark( manifestFromJson( doc, "/" ) );
    ASSERT_EQ( r.rows.size(), 2u );
    EXPECT_EQ( r.rows[1].method, TightenMethod::Pmnr );
    EXPECT_EQ( r.rows[1].status, VerdictStatus::Unsat );
    EXPECT_EQ( r.rows[1].subproblems, 1u );
    EXPECT_EQ( r.rows[0].status, VerdictStatus::Unsat );
    auto csv = lines( reportCsv( r ) );
    ASSERT_EQ( csv.size(), 3u );
    EXPECT_EQ( csv[2].rfind( "running,pmnr,UNSAT,", 0 ), 0u );
}

TEST( Bench, MissingFileRecordedAndRunContinues )
{
    fs::path dir = scratchDir( "missing" );
    Query q = oracle::runningQuery();
    writeFile( ( dir / "ok.json" ).string(), queryToJson( q, true ).dump() );
    Json doc = Json::parse( R"({"methods": ["deeppoly"],
        "entries": [{"query": "absent.json"}, {"query": "ok.json", "name": "a,b"}]})" );
    BenchReport r = runBenchmark( manifestFromJson( doc, dir ) );
    ASSERT_EQ( r.rows.size(), 2u );
    EXPECT_FALSE( r.rows[0].error.empty() );
    EXPECT_FALSE( r.rows[0].solved() );
    EXPECT_TRUE( r.rows[1].solved() );
    auto csv = lines( reportCsv( r ) );
    EXPECT_NE( csv[1].find( ",ERROR," ), std::string::npos );
    EXPECT_EQ( csv[2].rfind( "\"a,b\",deeppoly,UNSAT", 0 ), 0u );
}

TEST( Bench, RandomSuitePmnrSolvesNoFewer )
{
    fs::path dir = scratchDir( "suite" );
    std::mt19937_64 rng( 5 );
    Json entries = Json::array();
    for ( int k = 0; k < 10; ++k )
    {
        std::string file = "q" + std::to_string( k ) + ".json";
        writeFile( ( dir / file ).string(), queryToJson( randomQuery( rng ), true ).dump() );
        entries.push_back( { { "query", file } } );
    }
    Json doc = { { "methods", { "deeppoly", "pmnr" } }, { "max_subproblems", 8 }, { "entries", entries } };
    writeFile( ( dir / "manifest.json" ).string(), doc.dump( 2 ) );
    BenchReport r = runBenchmark( loadManifest( ( dir / "manifest.json" ).string() ) );
    EXPECT_EQ( r.rows.size(), 20u );
    EXPECT_GE( r.solved( TightenMethod::Pmnr ), r.solved( TightenMethod::DeepPoly ) );
    for ( const BenchRow &row : r.rows )
        EXPECT_TRUE( row.error.empty() ) << row.error;
    std::vector<double> cactus = r.cactus( TightenMethod::Pmnr );
    EXPECT_EQ( cactus.size(), r.solved( TightenMethod::Pmnr ) );
    EXPECT_TRUE( std::is_sorted( cactus.begin(), cactus.end() ) );
    Json summary = reportSummary( r );
    EXPECT_EQ( summary["pmnr"]["solved"], r.solved( TightenMethod::Pmnr ) );
}

TEST( Bench, ManifestErrors )
{
    EXPECT_THROW( manifestFromJson( Json::parse( "[]" ), "." ), ParseError );
    EXPECT_THROW( manifestFromJson( Json::parse( R"({"entries": [{"net": "x"}]})" ), "." ), ParseError );
    EXPECT_THROW( manifestFromJson( Json::parse( R"({"methods": ["magic"], "entries": []})" ), "." ), ParseError );
}

TEST( RandomNet, ShapesAndDeterminism )
{
    std::mt19937_64 a( 9 ), b( 9 );
    RandomSpec spec;
    spec.inputs = 3;
    for ( int k = 0; k < 20; ++k )
    {
        Query qa = randomQuery( a, spec );
        Query qb = randomQuery( b, spec );
        EXPECT_EQ( serializeNetwork( qa.network ), serializeNetwork( qb.network ) );
        EXPECT_EQ( qa.output.threshold, qb.output.threshold );
        EXPECT_EQ( qa.network.inputSize(), 3u );
        EXPECT_EQ( qa.network.outputSize(), 1u );
        EXPECT_GE( qa.network.numLayers(), spec.minLayers );
        EXPECT_LE( qa.network.numLayers(), spec.maxLayers );
        EXPECT_NO_THROW( qa.validate() );
    }
    spec.minWidth = 5;
    spec.maxWidth = 4;
    EXPECT_THROW( randomNetwork( a, spec ), PreconditionError );
}

TEST( RandomNet, BothVerdictsOccur )
{
    std::mt19937_64 rng( 31 );
    unsigned sat = 0, unsat = 0;
    for ( int k = 0; k < 40; ++k )
    {
        Query q = randomQuery( rng );
        Network c = q.canonicalNetwork();
        if ( countUnfixed( c, deepPoly( c, q.input ).bounds ) > 12 )
            continue;
        VerdictStatus s = patternOracle( q ).status;
        sat += s == VerdictStatus::Sat;
        unsat += s == VerdictStatus::Unsat;
    }
    EXPECT_GT( sat, 3u );
    EXPECT_GT( unsat, 3u );
}
