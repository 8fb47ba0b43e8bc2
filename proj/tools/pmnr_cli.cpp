#include "pmnr/all.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

using namespace pmnr;

namespace {

enum ExitCode
{
    kUnsat = 0,
    kSat = 1,
    kUnknown = 2,
    kError = 3,
};

struct SolverOptions
{
    std::string backend = "simplex";
    std::string command;

    LpSolver make() const
    {
        if ( backend == "simplex" )
            return defaultLpSolver();
        if ( command.empty() )
            throw PreconditionError( "--lp-backend external needs --lp-command" );
        return externalLpSolver( command );
    }
};

void addSolverOptions( CLI::App *cmd, SolverOptions &opts )
{
    cmd->add_option( "--lp-backend", opts.backend, "LP backend" )->check( CLI::IsMember( { "simplex", "external" } ) );
    cmd->add_option( "--lp-command", opts.command, "External solver command; receives the LP JSON path" );
}

void addPmnrOptions( CLI::App *cmd, PmnrConfig &cfg, bool &noAlpha )
{
    cmd->add_option( "--group-size", cfg.groupSize, "Neurons per multi-neuron group" );
    cmd->add_option( "--pmnr-iters", cfg.iterations, "Tightening iterations" );
    cmd->add_option( "--seed", cfg.seed, "Seed for random neuron selection" );
    cmd->add_option( "--pgd-iters", cfg.pgd.iterations, "Dual ascent iterations" );
    cmd->add_option( "--pgd-step", cfg.pgd.step, "Dual ascent step size" );
    cmd->add_flag( "--pgd-no-alpha", noAlpha, "Keep relaxation slopes fixed during dual ascent" );
}

void writeJson( const std::string &path, const Json &doc )
{
    if ( path == "-" )
        std::cout << doc.dump( 2 ) << "\n";
    else
        writeFile( path, doc.dump( 2 ) + "\n" );
}

Query readQuery( const std::string &net, const std::string &query )
{
    Query q = net.empty() ? parseQuery( readFile( query ) ) : loadQuery( net, query );
    q.validate();
    return q;
}

int verdictExit( VerdictStatus s )
{
    switch ( s )
    {
    case VerdictStatus::Unsat:
        return kUnsat;
    case VerdictStatus::Sat:
        return kSat;
    default:
        return kUnknown;
    }
}

} // namespace

int main( int argc, char **argv )
{
    CLI::App app{ "Multi-neuron bound tightening and branch-and-bound verification" };
    app.require_subcommand( 1 );

    std::string netPath, queryPath, outPath, planesPath, method = "pmnr";
    PmnrConfig pmnrCfg;
    bool noAlpha = false;
    bool withOutput = false;
    SolverOptions solverOpts;

    CLI::App *tightenCmd = app.add_subcommand( "tighten", "Compute bounds for every neuron" );
    tightenCmd->add_option( "--net", netPath, "Network JSON (omit if the query embeds it)" );
    tightenCmd->add_option( "--query", queryPath, "Query JSON" )->required();
    tightenCmd->add_option( "--method", method, "Tightening method" )
        ->check( CLI::IsMember( { "deeppoly", "fbc", "pmnr", "pmnr-all", "pmnr-random" } ) );
    tightenCmd->add_option( "--out", outPath, "bounds.json destination ('-' for stdout)" );
    tightenCmd->add_option( "--planes-out", planesPath, "planes.json destination" );
    tightenCmd->add_flag( "--output-constraint", withOutput, "Restrict the output to the unsafe side" );
    addPmnrOptions( tightenCmd, pmnrCfg, noAlpha );
    addSolverOptions( tightenCmd, solverOpts );

    BabConfig babCfg;
    std::string split = "nsse";
    CLI::App *verifyCmd = app.add_subcommand( "verify", "Decide a query by branch and bound" );
    verifyCmd->add_option( "--net", netPath, "Network JSON (omit if the query embeds it)" );
    verifyCmd->add_option( "--query", queryPath, "Query JSON" )->required();
    verifyCmd->add_option( "--tighten,--method", method, "Root tightening method" )
        ->check( CLI::IsMember( { "deeppoly", "fbc", "pmnr", "pmnr-all", "pmnr-random" } ) );
    verifyCmd->add_option( "--timeout", babCfg.timeout, "Wall-clock limit in seconds" );
    verifyCmd->add_option( "--threads", babCfg.threads, "Worker threads" );
    verifyCmd->add_option( "--split", split, "Split heuristic" )->check( CLI::IsMember( { "nsse", "width" } ) );
    verifyCmd->add_option( "--max-depth", babCfg.maxDepth, "Maximum split depth" );
    verifyCmd->add_option( "--max-subproblems", babCfg.maxSubproblems, "Subproblem budget (0 = unlimited)" );
    verifyCmd->add_option( "--out", outPath, "Verdict JSON destination" );
    addPmnrOptions( verifyCmd, pmnrCfg, noAlpha );
    addSolverOptions( verifyCmd, solverOpts );

    std::string manifestPath, summaryPath;
    CLI::App *benchCmd = app.add_subcommand( "bench", "Run a benchmark manifest" );
    benchCmd->add_option( "--manifest", manifestPath, "Manifest JSON" )->required();
    benchCmd->add_option( "--out", outPath, "report.csv destination ('-' for stdout)" )->required();
    benchCmd->add_option( "--summary", summaryPath, "Solved counts and cactus series JSON" );
    addPmnrOptions( benchCmd, pmnrCfg, noAlpha );

    std::string lpPath;
    CLI::App *lpCmd = app.add_subcommand( "lp-solve", "Solve a linear program given as JSON" );
    lpCmd->add_option( "lp", lpPath, "LP JSON file" )->required();
    lpCmd->add_option( "--out", outPath, "Outcome JSON destination" );
    addSolverOptions( lpCmd, solverOpts );

    RandomSpec spec;
    unsigned count = 10;
    std::uint64_t genSeed = 1;
    std::string outDir;
    std::vector<std::string> methods{ "deeppoly", "pmnr" };
    unsigned budget = 0;
    CLI::App *genCmd = app.add_subcommand( "gen-random", "Write random queries and a manifest" );
    genCmd->add_option( "--out-dir", outDir, "Destination directory" )->required();
    genCmd->add_option( "--count", count, "Number of queries" );
    genCmd->add_option( "--seed", genSeed, "Random seed" );
    genCmd->add_option( "--inputs", spec.inputs, "Input dimension" );
    genCmd->add_option( "--min-layers", spec.minLayers, "Fewest layers, output included" );
    genCmd->add_option( "--max-layers", spec.maxLayers, "Most layers, output included" );
    genCmd->add_option( "--min-width", spec.minWidth, "Narrowest hidden layer" );
    genCmd->add_option( "--max-width", spec.maxWidth, "Widest hidden layer" );
    genCmd->add_option( "--radius", spec.radius, "Input box half-width" );
    genCmd->add_option( "--methods", methods, "Methods listed in the manifest" );
    genCmd->add_option( "--max-subproblems", budget, "Budget written to the manifest" );

    unsigned maxUnfixed = 12;
    CLI::App *oracleCmd = app.add_subcommand( "oracle", "Exact verdict and output range by pattern enumeration" );
    oracleCmd->add_option( "--net", netPath, "Network JSON (omit if the query embeds it)" );
    oracleCmd->add_option( "--query", queryPath, "Query JSON" )->required();
    oracleCmd->add_option( "--max-unfixed", maxUnfixed, "Refuse above this many unfixed neurons" );

    try
    {
        app.parse( argc, argv );
    }
    catch ( const CLI::ParseError &e )
    {
        int rc = app.exit( e );
        return rc == 0 ? 0 : kError;
    }

    try
    {
        pmnrCfg.pgd.optimizeAlpha = !noAlpha;
        pmnrCfg.validate();

        if ( *tightenCmd )
        {
            Query q = readQuery( netPath, queryPath );
            Network canonical = q.canonicalNetwork();
            PmnrResult r =
                tighten( canonical, q.input, withOutput, parseMethod( method ), pmnrCfg, solverOpts.make() );
            if ( !outPath.empty() )
                writeJson( outPath, boundsToJson( r.bounds ) );
            if ( !planesPath.empty() )
                writeJson( planesPath, planesToJson( r.planes, r.infeasible ) );
            if ( r.contradiction() )
                std::cout << "contradiction: query is UNSAT\n";
            else
            {
                Interval out = originalOutputInterval( q, r.bounds.output() );
                std::cout << "output in [" << out.lower[0] << ", " << out.upper[0] << "]\n";
            }
            std::cout << "iterations " << r.iterations << ", planes " << r.planes.size() << ", infeasible branches "
                      << r.infeasible.size() << "\n";
            return 0;
        }

        if ( *verifyCmd )
        {
            Query q = readQuery( netPath, queryPath );
            babCfg.method = parseMethod( method );
            babCfg.pmnr = pmnrCfg;
            babCfg.split = split == "width" ? SplitHeuristic::Width : SplitHeuristic::Nsse;
            Verdict v = babVerify( q.canonicalNetwork(), q.input, babCfg, solverOpts.make() );
            if ( !outPath.empty() )
                writeJson( outPath, verdictToJson( v ) );
            std::cout << verdictName( v.status );
            if ( v.status == VerdictStatus::Sat )
                std::cout << " witness " << detail::toJson( v.witness ).dump() << " output "
                          << evaluate( q.network, v.witness )[0];
            if ( !v.reason.empty() )
                std::cout << " (" << v.reason << ")";
            std::cout << "\nsubproblems " << v.stats.subproblems << ", wall time " << v.stats.wallTime << " s\n";
            return verdictExit( v.status );
        }

        if ( *benchCmd )
        {
            BabConfig base;
            base.pmnr = pmnrCfg;
            BenchReport report = runBenchmark( loadManifest( manifestPath ), base );
            if ( outPath == "-" )
                std::cout << reportCsv( report );
            else
                writeFile( outPath, reportCsv( report ) );
            if ( !summaryPath.empty() )
                writeJson( summaryPath, reportSummary( report ) );
            for ( TightenMethod m : report.methods() )
                std::cerr << methodName( m ) << ": solved " << report.solved( m ) << "\n";
            return 0;
        }

        if ( *lpCmd )
        {
            LinearProgram lp = lpFromJson( detail::parseText( readFile( lpPath ), lpPath ) );
            LpOutcome outcome = solverOpts.make()( lp );
            writeJson( outPath.empty() ? "-" : outPath, lpOutcomeToJson( outcome ) );
            return 0;
        }

        if ( *genCmd )
        {
            std::filesystem::create_directories( outDir );
            std::mt19937_64 rng( genSeed );
            Json entries = Json::array();
            for ( unsigned k = 0; k < count; ++k )
            {
                std::string file = "q" + std::to_string( k ) + ".json";
                writeJson( ( std::filesystem::path( outDir ) / file ).string(), queryToJson( randomQuery( rng, spec ), true ) );
                entries.push_back( { { "name", "q" + std::to_string( k ) }, { "query", file } } );
            }
            for ( const std::string &m : methods )
                parseMethod( m );
            Json manifest{ { "methods", methods }, { "max_subproblems", budget }, { "entries", entries } };
            writeJson( ( std::filesystem::path( outDir ) / "manifest.json" ).string(), manifest );
            std::cout << "wrote " << count << " queries to " << outDir << "\n";
            return 0;
        }

        if ( *oracleCmd )
        {
            Query q = readQuery( netPath, queryPath );
            Network canonical = q.canonicalNetwork();
            Verdict v = patternOracle( canonical, q.input, maxUnfixed );
            Interval range = originalOutputInterval( q, exactRange( canonical, q.input, canonical.numLayers(), 0 ) );
            std::cout << verdictName( v.status ) << "\nexact output range [" << range.lower[0] << ", "
                      << range.upper[0] << "]\n";
            return verdictExit( v.status );
        }
    }
    catch ( const std::exception &e )
    {
        std::cerr << "error: " << e.what() << "\n";
        return kError;
    }
    return kError;
}
