#pragma once

#include "pmnr/lp_io.hpp"
#include "pmnr/network_io.hpp"
#include "pmnr/verify.hpp"

#include <array>

namespace pmnr {

inline const std::array<std::pair<const char *, TightenMethod>, 5> &methodTable()
{
    static const std::array<std::pair<const char *, TightenMethod>, 5> table{ {
        { "deeppoly", TightenMethod::DeepPoly },
        { "fbc", TightenMethod::Fbc },
        { "pmnr", TightenMethod::Pmnr },
        { "pmnr-all", TightenMethod::PmnrAll },
        { "pmnr-random", TightenMethod::PmnrRandom },
    } };
    return table;
}

inline std::string methodName( TightenMethod m )
{
    for ( const auto &[name, value] : methodTable() )
        if ( value == m )
            return name;
    return "unknown";
}

inline TightenMethod parseMethod( const std::string &name )
{
    for ( const auto &[n, value] : methodTable() )
        if ( name == n )
            return value;
    throw ParseError( "method", "unknown tightening method '" + name + "'" );
}

inline Json intervalsToJson( const std::vector<Interval> &layers )
{
    Json out = Json::array();
    for ( const Interval &iv : layers )
    {
        Json layer = Json::array();
        for ( Eigen::Index j = 0; j < iv.size(); ++j )
            layer.push_back( { detail::boundToJson( iv.lower[j] ), detail::boundToJson( iv.upper[j] ) } );
        out.push_back( layer );
    }
    return out;
}

inline std::vector<Interval> intervalsFromJson( const Json &node, const std::string &path )
{
    if ( !node.is_array() )
        throw ParseError( path, "expected an array of layers" );
    std::vector<Interval> out;
    for ( size_t i = 0; i < node.size(); ++i )
    {
        const Json &layer = node[i];
        std::string lp = path + "[" + std::to_string( i ) + "]";
        if ( !layer.is_array() )
            throw ParseError( lp, "expected an array of [lower, upper] pairs" );
        Interval iv = Interval::sized( static_cast<Eigen::Index>( layer.size() ) );
        for ( size_t j = 0; j < layer.size(); ++j )
        {
            std::string pp = lp + "[" + std::to_string( j ) + "]";
            if ( !layer[j].is_array() || layer[j].size() != 2 )
                throw ParseError( pp, "expected a [lower, upper] pair" );
            iv.lower[static_cast<Eigen::Index>( j )] = detail::boundFromJson( layer[j][0], -kInfinity, pp );
            iv.upper[static_cast<Eigen::Index>( j )] = detail::boundFromJson( layer[j][1], kInfinity, pp );
        }
        out.push_back( std::move( iv ) );
    }
    return out;
}

/*
  bounds.json: {"contradiction": bool, "pre": [...], "post": [...]}.
  pre[i] and post[i] list one [lower, upper] pair per neuron of layer i;
  layer 0 is the input box in both.
  Unbounded entries are written as null.
*/
inline Json boundsToJson( const BoundsState &b )
{
    return { { "contradiction", b.contradiction }, { "pre", intervalsToJson( b.pre ) },
             { "post", intervalsToJson( b.post ) } };
}

inline BoundsState boundsFromJson( const Json &doc )
{
    BoundsState b;
    b.contradiction = doc.value( "contradiction", false );
    b.pre = intervalsFromJson( detail::require( doc, "pre", "$" ), "pre" );
    b.post = intervalsFromJson( detail::require( doc, "post", "$" ), "post" );
    if ( b.pre.size() != b.post.size() )
        throw ParseError( "$", "pre and post layer counts differ" );
    return b;
}

inline Json varToJson( const VarRef &v )
{
    return { { "kind", v.kind == VarKind::Pre ? "pre" : "post" }, { "layer", v.layer }, { "index", v.index } };
}

inline const char *templateName( PlaneTemplate t )
{
    switch ( t )
    {
    case PlaneTemplate::Upper:
        return "upper";
    case PlaneTemplate::Lower:
        return "lower";
    default:
        return "none";
    }
}

/*
  planes.json: {"planes": [{"terms": [{"var": {...}, "coeff": c}], "bias": b,
  "provenance": {...}}], "infeasible": [{"layer", "neurons", "phases"}]}.
  Each plane reads sum coeff * var <= bias.
*/
inline Json planesToJson( const std::vector<HyperPlane> &planes, const std::vector<BranchCombination> &infeasible )
{
    Json list = Json::array();
    for ( const HyperPlane &p : planes )
    {
        Json terms = Json::array();
        for ( const Term &t : p.terms )
            terms.push_back( { { "var", varToJson( t.var ) }, { "coeff", t.coeff } } );
        list.push_back( { { "terms", terms },
                          { "bias", p.bias },
                          { "provenance",
                            { { "epsilon", p.provenance.epsilon },
                              { "template", templateName( p.provenance.tmpl ) },
                              { "layer", p.provenance.groupLayer },
                              { "neurons", p.provenance.groupNeurons },
                              { "iteration", p.provenance.iteration } } } } );
    }
    Json branches = Json::array();
    for ( const BranchCombination &b : infeasible )
        branches.push_back( { { "layer", b.layer }, { "neurons", b.neurons }, { "phases", b.phases } } );
    return { { "planes", list }, { "infeasible", branches } };
}

inline Json verdictToJson( const Verdict &v )
{
    Json doc{ { "status", verdictName( v.status ) },
              { "subproblems", v.stats.subproblems },
              { "tighten_calls", v.stats.tightenCalls },
              { "wall_time", v.stats.wallTime } };
    if ( v.status == VerdictStatus::Sat )
        doc["witness"] = detail::toJson( v.witness );
    if ( !v.reason.empty() )
        doc["reason"] = v.reason;
    return doc;
}

} // namespace pmnr
