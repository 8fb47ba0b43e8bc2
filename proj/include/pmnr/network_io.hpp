#pragma once

#include "pmnr/network.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

namespace pmnr {

using Json = nlohmann::json;

namespace detail {

inline double readNumber( const Json &node, const std::string &path )
{
    if ( !node.is_number() )
        throw ParseError( path, "expected a number" );
    double value = node.get<double>();
    if ( !std::isfinite( value ) )
        throw ParseError( path, "non-finite number" );
    return value;
}

inline Vector readVector( const Json &node, const std::string &path )
{
    if ( !node.is_array() )
        throw ParseError( path, "expected an array of numbers" );
    Vector v( static_cast<Eigen::Index>( node.size() ) );
    for ( size_t k = 0; k < node.size(); ++k )
        v[static_cast<Eigen::Index>( k )] =
            readNumber( node[k], path + "[" + std::to_string( k ) + "]" );
    return v;
}

inline Matrix readMatrix( const Json &node, const std::string &path )
{
    if ( !node.is_array() || node.empty() )
        throw ParseError( path, "expected a non-empty array of rows" );
    size_t cols = 0;
    Matrix m;
    for ( size_t r = 0; r < node.size(); ++r )
    {
        std::string rowPath = path + "[" + std::to_string( r ) + "]";
        Vector row = readVector( node[r], rowPath );
        if ( r == 0 )
        {
            cols = static_cast<size_t>( row.size() );
            m.resize( static_cast<Eigen::Index>( node.size() ), static_cast<Eigen::Index>( cols ) );
        }
        else if ( static_cast<size_t>( row.size() ) != cols )
            throw ParseError( rowPath, "row length " + std::to_string( row.size() ) +
                                           " differs from first row length " +
                                           std::to_string( cols ) );
        m.row( static_cast<Eigen::Index>( r ) ) = row.transpose();
    }
    return m;
}

inline const Json &require( const Json &node, const char *key, const std::string &path )
{
    if ( !node.is_object() )
        throw ParseError( path, "expected an object" );
    auto it = node.find( key );
    if ( it == node.end() )
        throw ParseError( path + "." + key, "missing field" );
    return *it;
}

inline Json toJson( const Vector &v )
{
    Json out = Json::array();
    for ( Eigen::Index j = 0; j < v.size(); ++j )
        out.push_back( v[j] );
    return out;
}

inline Json toJson( const Matrix &m )
{
    Json out = Json::array();
    for ( Eigen::Index r = 0; r < m.rows(); ++r )
        out.push_back( toJson( Vector( m.row( r ).transpose() ) ) );
    return out;
}

inline Json parseText( const std::string &text, const std::string &what )
{
    try
    {
        return Json::parse( text );
    }
    catch ( const Json::exception &e )
    {
        throw ParseError( what, e.what() );
    }
}

} // namespace detail

inline Activation parseActivation( const Json &layer, const std::string &path )
{
    const Json &kind = detail::require( layer, "activation", path );
    if ( !kind.is_string() )
        throw ParseError( path + ".activation", "expected a string" );
    std::string name = kind.get<std::string>();
    if ( name == "identity" || name == "linear" )
        return Activation::identity();
    if ( name == "relu" )
        return Activation::relu();
    if ( name == "abs" )
        return Activation::abs();
    if ( name == "leaky_relu" )
    {
        double slope = detail::readNumber( detail::require( layer, "slope", path ), path + ".slope" );
        if ( !( slope > 0.0 && slope < 1.0 ) )
            throw ParseError( path + ".slope", "leaky_relu slope must lie in (0,1)" );
        return Activation::leakyRelu( slope );
    }
    throw ParseError( path + ".activation", "unsupported activation '" + name + "'" );
}

inline Network networkFromJson( const Json &doc )
{
    const Json &layers = detail::require( doc, "layers", "$" );
    if ( !layers.is_array() || layers.empty() )
        throw ParseError( "layers", "expected a non-empty array" );
    std::vector<Layer> result;
    for ( size_t i = 0; i < layers.size(); ++i )
    {
        std::string path = "layers[" + std::to_string( i ) + "]";
        const Json &node = layers[i];
        Layer layer;
        layer.weights = detail::readMatrix( detail::require( node, "weights", path ), path + ".weights" );
        layer.bias = detail::readVector( detail::require( node, "bias", path ), path + ".bias" );
        layer.activation = parseActivation( node, path );
        if ( layer.bias.size() != layer.weights.rows() )
            throw ParseError( path + ".bias", "length " + std::to_string( layer.bias.size() ) +
                                                  " does not match " +
                                                  std::to_string( layer.weights.rows() ) +
                                                  " weight rows" );
        if ( i > 0 && layer.weights.cols() != result.back().weights.rows() )
            throw ParseError( path + ".weights",
                              "expects " + std::to_string( layer.weights.cols() ) +
                                  " inputs but previous layer has width " +
                                  std::to_string( result.back().weights.rows() ) );
        result.push_back( std::move( layer ) );
    }
    if ( result.back().activation.type != ActivationType::Identity )
        throw ParseError( "layers[" + std::to_string( result.size() - 1 ) + "].activation",
                          "output layer must be identity" );
    return Network( std::move( result ) );
}

inline Network parseNetwork( const std::string &text )
{
    return networkFromJson( detail::parseText( text, "$" ) );
}

inline Json networkToJson( const Network &net )
{
    Json layers = Json::array();
    for ( const Layer &layer : net.layers() )
    {
        Json node;
        node["weights"] = detail::toJson( layer.weights );
        node["bias"] = detail::toJson( layer.bias );
        node["activation"] = activationName( layer.activation );
        if ( layer.activation.type == ActivationType::LeakyRelu )
            node["slope"] = layer.activation.slope;
        layers.push_back( std::move( node ) );
    }
    return Json{ { "layers", layers } };
}

inline std::string serializeNetwork( const Network &net )
{
    return networkToJson( net ).dump( 2 );
}

inline InputDomain inputDomainFromJson( const Json &node, const std::string &path )
{
    const Json &kindNode = detail::require( node, "kind", path );
    if ( !kindNode.is_string() )
        throw ParseError( path + ".kind", "expected a string" );
    std::string kind = kindNode.get<std::string>();
    InputDomain domain;
    if ( kind == "box" )
    {
        Box box{ detail::readVector( detail::require( node, "lower", path ), path + ".lower" ),
                 detail::readVector( detail::require( node, "upper", path ), path + ".upper" ) };
        if ( box.lower.size() != box.upper.size() )
            throw ParseError( path + ".upper", "length differs from lower" );
        for ( Eigen::Index j = 0; j < box.lower.size(); ++j )
            if ( box.lower[j] > box.upper[j] )
                throw ParseError( path + ".lower[" + std::to_string( j ) + "]",
                                  "lower exceeds upper" );
        domain = box;
    }
    else if ( kind == "linf" || kind == "lp" )
    {
        LpBall ball;
        ball.center = detail::readVector( detail::require( node, "center", path ), path + ".center" );
        ball.radius = detail::readNumber( detail::require( node, "eps", path ), path + ".eps" );
        if ( !( ball.radius > 0 ) )
            throw ParseError( path + ".eps", "radius must be positive" );
        ball.p = kInfinity;
        if ( kind == "lp" )
        {
            const Json &p = detail::require( node, "p", path );
            if ( p.is_string() && ( p == "inf" || p == "infinity" ) )
                ball.p = kInfinity;
            else
                ball.p = detail::readNumber( p, path + ".p" );
            if ( !( ball.p >= 1.0 ) )
                throw ParseError( path + ".p", "norm order must be >= 1" );
        }
        domain = ball;
    }
    else if ( kind == "polyhedron" )
    {
        Polyhedron poly{ detail::readMatrix( detail::require( node, "A", path ), path + ".A" ),
                         detail::readVector( detail::require( node, "b", path ), path + ".b" ) };
        if ( poly.A.rows() != poly.b.size() )
            throw ParseError( path + ".b", "length does not match rows of A" );
        domain = poly;
    }
    else
        throw ParseError( path + ".kind", "unknown input domain '" + kind + "'" );
    return domain;
}

inline Json inputDomainToJson( const InputDomain &domain )
{
    Json node;
    if ( const Box *box = std::get_if<Box>( &domain ) )
    {
        node["kind"] = "box";
        node["lower"] = detail::toJson( box->lower );
        node["upper"] = detail::toJson( box->upper );
    }
    else if ( const LpBall *ball = std::get_if<LpBall>( &domain ) )
    {
        node["kind"] = std::isinf( ball->p ) ? "linf" : "lp";
        node["center"] = detail::toJson( ball->center );
        node["eps"] = ball->radius;
        if ( !std::isinf( ball->p ) )
            node["p"] = ball->p;
    }
    else
    {
        const Polyhedron &poly = std::get<Polyhedron>( domain );
        node["kind"] = "polyhedron";
        node["A"] = detail::toJson( poly.A );
        node["b"] = detail::toJson( poly.b );
    }
    return node;
}

/*
  A query document holds the input domain and output property. The network
  is either embedded under "network" or supplied separately.
*/
inline Query queryFromJson( const Json &doc, const Network *network )
{
    Query query;
    if ( network )
        query.network = *network;
    else if ( doc.is_object() && doc.contains( "network" ) )
        query.network = networkFromJson( doc["network"] );
    else
        throw ParseError( "network", "no network supplied" );

    query.input = inputDomainFromJson( detail::require( doc, "input", "$" ), "input" );

    if ( doc.contains( "output" ) )
    {
        const Json &out = doc["output"];
        if ( out.contains( "direction" ) )
        {
            const Json &dir = out["direction"];
            if ( !dir.is_string() )
                throw ParseError( "output.direction", "expected a string" );
            if ( dir == ">" )
                query.output.direction = OutputDirection::Greater;
            else if ( dir == "<" )
                query.output.direction = OutputDirection::Less;
            else
                throw ParseError( "output.direction", "expected \">\" or \"<\"" );
        }
        if ( out.contains( "threshold" ) )
            query.output.threshold = detail::readNumber( out["threshold"], "output.threshold" );
    }

    if ( domainDimension( query.input ) != query.network.inputSize() )
        throw ParseError( "input", "dimension " + std::to_string( domainDimension( query.input ) ) +
                                       " does not match network input size " +
                                       std::to_string( query.network.inputSize() ) );
    if ( query.network.outputSize() != 1 )
        throw ParseError( "network", "queries require a single output" );
    return query;
}

inline Query parseQuery( const std::string &text, const Network &network )
{
    return queryFromJson( detail::parseText( text, "$" ), &network );
}

inline Query parseQuery( const std::string &text )
{
    return queryFromJson( detail::parseText( text, "$" ), nullptr );
}

inline Json queryToJson( const Query &query, bool embedNetwork )
{
    Json doc;
    if ( embedNetwork )
        doc["network"] = networkToJson( query.network );
    doc["input"] = inputDomainToJson( query.input );
    doc["output"] = { { "direction",
                        query.output.direction == OutputDirection::Greater ? ">" : "<" },
                      { "threshold", query.output.threshold } };
    return doc;
}

inline std::string readFile( const std::string &path )
{
    std::ifstream in( path );
    if ( !in )
        throw std::runtime_error( "cannot open " + path );
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void writeFile( const std::string &path, const std::string &content )
{
    std::ofstream out( path );
    if ( !out )
        throw std::runtime_error( "cannot write " + path );
    out << content;
}

inline Network loadNetwork( const std::string &path )
{
    return parseNetwork( readFile( path ) );
}

inline Query loadQuery( const std::string &netPath, const std::string &queryPath )
{
    Network net = loadNetwork( netPath );
    return parseQuery( readFile( queryPath ), net );
}

} // namespace pmnr
