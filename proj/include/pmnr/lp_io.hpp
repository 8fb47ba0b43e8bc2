#pragma once

#include "pmnr/network_io.hpp"
#include "pmnr/simplex.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <random>

namespace pmnr {

namespace detail {

inline Json boundToJson( double v )
{
    if ( std::isinf( v ) )
        return nullptr;
    return v;
}

inline double boundFromJson( const Json &node, double absent, const std::string &path )
{
    if ( node.is_null() )
        return absent;
    return readNumber( node, path );
}

} // namespace detail

/*
  {"sense":"min"|"max","objective":[...],
   "constraints":[{"coeffs":[...],"relation":"<="|"="|">=","rhs":r}],
   "lower":[l|null,...],"upper":[u|null,...]}
*/
inline Json lpToJson( const LinearProgram &lp )
{
    Json doc;
    doc["sense"] = lp.sense == Sense::Minimize ? "min" : "max";
    doc["objective"] = detail::toJson( lp.objective );
    Json rows = Json::array();
    for ( const LinearConstraint &c : lp.constraints )
    {
        const char *rel = c.relation == Relation::LessEqual
                              ? "<="
                              : ( c.relation == Relation::Equal ? "=" : ">=" );
        rows.push_back( { { "coeffs", detail::toJson( c.coeffs ) },
                          { "relation", rel },
                          { "rhs", c.rhs } } );
    }
    doc["constraints"] = rows;
    Json lower = Json::array();
    Json upper = Json::array();
    for ( unsigned j = 0; j < lp.numVariables(); ++j )
    {
        lower.push_back( detail::boundToJson( lp.lower[j] ) );
        upper.push_back( detail::boundToJson( lp.upper[j] ) );
    }
    doc["lower"] = lower;
    doc["upper"] = upper;
    return doc;
}

inline LinearProgram lpFromJson( const Json &doc )
{
    Vector objective = detail::readVector( detail::require( doc, "objective", "$" ), "objective" );
    LinearProgram lp( static_cast<unsigned>( objective.size() ) );
    lp.objective = objective;
    if ( doc.contains( "sense" ) )
    {
        std::string sense = doc["sense"].get<std::string>();
        if ( sense == "min" )
            lp.sense = Sense::Minimize;
        else if ( sense == "max" )
            lp.sense = Sense::Maximize;
        else
            throw ParseError( "sense", "expected \"min\" or \"max\"" );
    }
    if ( doc.contains( "constraints" ) )
    {
        const Json &rows = doc["constraints"];
        for ( size_t k = 0; k < rows.size(); ++k )
        {
            std::string path = "constraints[" + std::to_string( k ) + "]";
            LinearConstraint c;
            c.coeffs = detail::readVector( detail::require( rows[k], "coeffs", path ), path + ".coeffs" );
            if ( c.coeffs.size() != objective.size() )
                throw ParseError( path + ".coeffs", "length does not match objective" );
            std::string rel = detail::require( rows[k], "relation", path ).get<std::string>();
            if ( rel == "<=" )
                c.relation = Relation::LessEqual;
            else if ( rel == "=" || rel == "==" )
                c.relation = Relation::Equal;
            else if ( rel == ">=" )
                c.relation = Relation::GreaterEqual;
            else
                throw ParseError( path + ".relation", "unknown relation '" + rel + "'" );
            c.rhs = detail::readNumber( detail::require( rows[k], "rhs", path ), path + ".rhs" );
            lp.constraints.push_back( std::move( c ) );
        }
    }
    for ( const char *key : { "lower", "upper" } )
    {
        if ( !doc.contains( key ) )
            continue;
        const Json &arr = doc[key];
        if ( !arr.is_array() || arr.size() != objective.size() )
            throw ParseError( key, "expected one entry per variable" );
        bool isLower = std::string( key ) == "lower";
        for ( size_t j = 0; j < arr.size(); ++j )
        {
            double v = detail::boundFromJson( arr[j], isLower ? -kInfinity : kInfinity,
                                              std::string( key ) + "[" + std::to_string( j ) + "]" );
            ( isLower ? lp.lower : lp.upper )[static_cast<Eigen::Index>( j )] = v;
        }
    }
    return lp;
}

inline const char *lpStatusName( LpStatus status )
{
    switch ( status )
    {
    case LpStatus::Optimal:
        return "optimal";
    case LpStatus::Infeasible:
        return "infeasible";
    case LpStatus::Unbounded:
        return "unbounded";
    }
    return "infeasible";
}

// {"status":"optimal"|"infeasible"|"unbounded","value":v,"point":[...],"iterations":k}
inline Json lpOutcomeToJson( const LpOutcome &outcome )
{
    Json doc;
    doc["status"] = lpStatusName( outcome.status );
    doc["iterations"] = outcome.iterations;
    if ( outcome.status == LpStatus::Optimal )
    {
        doc["value"] = outcome.value;
        doc["point"] = detail::toJson( outcome.point );
    }
    return doc;
}

inline LpOutcome lpOutcomeFromJson( const Json &doc )
{
    LpOutcome outcome;
    std::string status = detail::require( doc, "status", "$" ).get<std::string>();
    if ( status == "optimal" )
    {
        outcome.status = LpStatus::Optimal;
        outcome.value = detail::readNumber( detail::require( doc, "value", "$" ), "value" );
        outcome.point = detail::readVector( detail::require( doc, "point", "$" ), "point" );
    }
    else if ( status == "infeasible" )
        outcome.status = LpStatus::Infeasible;
    else if ( status == "unbounded" )
        outcome.status = LpStatus::Unbounded;
    else if ( status == "stalled" )
        throw LpStalled( "external solver stalled" );
    else
        throw ParseError( "status", "unknown LP status '" + status + "'" );
    if ( doc.contains( "iterations" ) )
        outcome.iterations = doc["iterations"].get<unsigned>();
    return outcome;
}

/*
  Process-boundary solver: writes the program as JSON to a temporary file,
  runs `command <file>`, and reads the outcome JSON from its stdout.
*/
inline LpSolver externalLpSolver( const std::string &command )
{
    return [command]( const LinearProgram &lp ) {
        static std::atomic<unsigned long> counter{ 0 };
        std::random_device rd;
        std::filesystem::path file =
            std::filesystem::temp_directory_path() /
            ( "pmnr_lp_" + std::to_string( rd() ) + "_" + std::to_string( counter++ ) + ".json" );
        writeFile( file.string(), lpToJson( lp ).dump() );
        std::string cmd = command + " '" + file.string() + "'";
        FILE *pipe = popen( cmd.c_str(), "r" );
        if ( !pipe )
        {
            std::filesystem::remove( file );
            throw std::runtime_error( "cannot launch external LP solver: " + command );
        }
        std::string output;
        char buffer[4096];
        size_t got;
        while ( ( got = fread( buffer, 1, sizeof( buffer ), pipe ) ) > 0 )
            output.append( buffer, got );
        int rc = pclose( pipe );
        std::filesystem::remove( file );
        if ( rc != 0 )
            throw std::runtime_error( "external LP solver exited with status " + std::to_string( rc ) );
        return lpOutcomeFromJson( detail::parseText( output, "external LP output" ) );
    };
}

} // namespace pmnr
