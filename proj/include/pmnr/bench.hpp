#pragma once

#include "pmnr/io.hpp"

#include <filesystem>
#include <iomanip>

namespace pmnr {

/*
  Manifest:
  {"methods": ["deeppoly", "pmnr"], "timeout": 60, "max_subproblems": 0, "threads": 1,
   "entries": [{"name": "...", "net": "net.json", "query": "query.json",
                "methods": [...], "timeout": t}]}
  "net" may be omitted when the query embeds its network. Paths are relative
  to the manifest's directory. Entry fields override the top-level defaults.
*/
struct BenchEntry
{
    std::string name;
    std::string net;
    std::string query;
    std::vector<TightenMethod> methods;
    double timeout = 60.0;
};

struct BenchManifest
{
    std::vector<BenchEntry> entries;
    unsigned maxSubproblems = 0;
    unsigned threads = 1;
};

inline std::vector<TightenMethod> methodsFromJson( const Json &node, const std::string &path )
{
    if ( !node.is_array() )
        throw ParseError( path, "expected an array of method names" );
    std::vector<TightenMethod> out;
    for ( const Json &m : node )
    {
        if ( !m.is_string() )
            throw ParseError( path, "method names must be strings" );
        out.push_back( parseMethod( m.get<std::string>() ) );
    }
    return out;
}

inline BenchManifest manifestFromJson( const Json &doc, const std::filesystem::path &base )
{
    if ( !doc.is_object() )
        throw ParseError( "$", "manifest must be an object" );
    BenchManifest m;
    std::vector<TightenMethod> methods{ TightenMethod::DeepPoly, TightenMethod::Pmnr };
    if ( doc.contains( "methods" ) )
        methods = methodsFromJson( doc["methods"], "methods" );
    double timeout = doc.contains( "timeout" ) ? detail::readNumber( doc["timeout"], "timeout" ) : 60.0;
    m.maxSubproblems = doc.value( "max_subproblems", 0u );
    m.threads = doc.value( "threads", 1u );
    const Json empty = Json::array();
    const Json &entries = doc.contains( "entries" ) ? doc["entries"] : empty;
    if ( !entries.is_array() )
        throw ParseError( "entries", "expected an array" );
    auto resolve = [&]( const std::string &p ) {
        std::filesystem::path path( p );
        return path.is_absolute() ? path.string() : ( base / path ).string();
    };
    for ( size_t k = 0; k < entries.size(); ++k )
    {
        const Json &e = entries[k];
        std::string path = "entries[" + std::to_string( k ) + "]";
        BenchEntry entry;
        const Json &q = detail::require( e, "query", path );
        if ( !q.is_string() )
            throw ParseError( path + ".query", "expected a path" );
        entry.query = resolve( q.get<std::string>() );
        if ( e.contains( "net" ) )
            entry.net = resolve( e["net"].get<std::string>() );
        entry.name = e.value( "name", std::filesystem::path( entry.query ).stem().string() );
        entry.methods = e.contains( "methods" ) ? methodsFromJson( e["methods"], path + ".methods" ) : methods;
        entry.timeout = e.contains( "timeout" ) ? detail::readNumber( e["timeout"], path + ".timeout" ) : timeout;
        m.entries.push_back( std::move( entry ) );
    }
    return m;
}

inline BenchManifest loadManifest( const std::string &path )
{
    return manifestFromJson( detail::parseText( readFile( path ), path ),
                             std::filesystem::path( path ).parent_path() );
}

struct BenchRow
{
    std::string name;
    TightenMethod method = TightenMethod::DeepPoly;
    VerdictStatus status = VerdictStatus::Unknown;
    double wallTime = 0.0;
    unsigned subproblems = 0;
    unsigned tightenCalls = 0;
    std::string error; // load or run failure
    std::string note;  // UNKNOWN reason

    bool solved() const
    {
        return error.empty() && status != VerdictStatus::Unknown;
    }
};

struct BenchReport
{
    std::vector<BenchRow> rows;

    unsigned solved( TightenMethod m ) const
    {
        unsigned n = 0;
        for ( const BenchRow &r : rows )
            if ( r.method == m && r.solved() )
                ++n;
        return n;
    }

    // Sorted cumulative solve times of one method (a cactus plot series).
    std::vector<double> cactus( TightenMethod m ) const
    {
        std::vector<double> times;
        for ( const BenchRow &r : rows )
            if ( r.method == m && r.solved() )
                times.push_back( r.wallTime );
        std::sort( times.begin(), times.end() );
        for ( size_t k = 1; k < times.size(); ++k )
            times[k] += times[k - 1];
        return times;
    }

    std::vector<TightenMethod> methods() const
    {
        std::vector<TightenMethod> out;
        for ( const BenchRow &r : rows )
            if ( std::find( out.begin(), out.end(), r.method ) == out.end() )
                out.push_back( r.method );
        return out;
    }
};

inline BenchReport runBenchmark( const BenchManifest &manifest, const BabConfig &base = {} )
{
    BenchReport report;
    for ( const BenchEntry &e : manifest.entries )
    {
        Query query;
        std::string loadError;
        try
        {
            query = e.net.empty() ? parseQuery( readFile( e.query ) ) : loadQuery( e.net, e.query );
            query.validate();
        }
        catch ( const std::exception &ex )
        {
            loadError = ex.what();
        }
        for ( TightenMethod m : e.methods )
        {
            BenchRow row;
            row.name = e.name;
            row.method = m;
            if ( !loadError.empty() )
            {
                row.error = loadError;
                report.rows.push_back( row );
                continue;
            }
            BabConfig cfg = base;
            cfg.method = m;
            cfg.timeout = e.timeout;
            cfg.maxSubproblems = manifest.maxSubproblems;
            cfg.threads = manifest.threads;
            try
            {
                Verdict v = babVerify( query, cfg );
                row.status = v.status;
                row.wallTime = v.stats.wallTime;
                row.subproblems = v.stats.subproblems;
                row.tightenCalls = v.stats.tightenCalls;
                row.note = v.reason;
            }
            catch ( const std::exception &ex )
            {
                row.error = ex.what();
            }
            report.rows.push_back( row );
        }
    }
    return report;
}

inline std::string csvField( const std::string &s )
{
    if ( s.find_first_of( ",\"\n" ) == std::string::npos )
        return s;
    std::string out = "\"";
    for ( char c : s )
    {
        if ( c == '"' )
            out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

// report.csv: name,method,status,wall_time,subproblems,tighten_calls,note
inline std::string reportCsv( const BenchReport &report )
{
    std::ostringstream out;
    out << "name,method,status,wall_time,subproblems,tighten_calls,note\n";
    out << std::setprecision( 6 ) << std::fixed;
    for ( const BenchRow &r : report.rows )
        out << csvField( r.name ) << ',' << methodName( r.method ) << ','
            << ( r.error.empty() ? verdictName( r.status ) : std::string( "ERROR" ) ) << ',' << r.wallTime << ','
            << r.subproblems << ',' << r.tightenCalls << ',' << csvField( r.error.empty() ? r.note : r.error )
            << '\n';
    return out.str();
}

inline Json reportSummary( const BenchReport &report )
{
    Json doc = Json::object();
    for ( TightenMethod m : report.methods() )
        doc[methodName( m )] = { { "solved", report.solved( m ) }, { "cactus", report.cactus( m ) } };
    return doc;
}

} // namespace pmnr
