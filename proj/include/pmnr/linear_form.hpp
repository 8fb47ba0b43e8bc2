#pragma once

#include "pmnr/network.hpp"

#include <string>
#include <vector>

namespace pmnr {

enum class VarKind
{
    Pre,  // x(i,j), i in 1..L
    Post, // h(i,j), i in 0..L-1 (layer 0 is the input)
};

struct VarRef
{
    VarKind kind = VarKind::Post;
    unsigned layer = 0;
    unsigned index = 0;

    friend bool operator==( const VarRef &, const VarRef & ) = default;
    friend auto operator<=>( const VarRef &, const VarRef & ) = default;
};

inline std::string varName( const VarRef &v )
{
    return std::string( v.kind == VarKind::Pre ? "x" : "h" ) + "(" + std::to_string( v.layer ) + "," +
           std::to_string( v.index ) + ")";
}

struct Term
{
    VarRef var;
    double coeff = 0.0;

    friend bool operator==( const Term &, const Term & ) = default;
};

enum class PlaneTemplate
{
    None,
    Upper, // sum eps_k (h - upper-slope row)
    Lower, // sum eps_k (h - lower-slope row)
};

struct Provenance
{
    std::vector<int> epsilon;
    PlaneTemplate tmpl = PlaneTemplate::None;
    unsigned groupLayer = 0;
    std::vector<unsigned> groupNeurons;
    unsigned iteration = 0;
};

// sum coeff * var <= bias
struct HyperPlane
{
    std::vector<Term> terms;
    double bias = 0.0;
    Provenance provenance;

    double evaluate( const std::vector<Vector> &pre, const std::vector<Vector> &post ) const
    {
        double v = 0.0;
        for ( const Term &t : terms )
            v += t.coeff * ( t.var.kind == VarKind::Pre ? pre[t.var.layer][t.var.index]
                                                        : post[t.var.layer][t.var.index] );
        return v;
    }

    unsigned maxLayer() const
    {
        unsigned m = 0;
        for ( const Term &t : terms )
            m = std::max( m, t.var.layer );
        return m;
    }

    unsigned minLayer() const
    {
        unsigned m = ~0u;
        for ( const Term &t : terms )
            m = std::min( m, t.var.layer );
        return m;
    }

    unsigned activationTerms() const
    {
        unsigned n = 0;
        for ( const Term &t : terms )
            if ( t.var.kind == VarKind::Post && t.coeff != 0.0 )
                ++n;
        return n;
    }
};

// Sorts terms, merges duplicates and drops zero coefficients.
inline std::vector<Term> canonicalTerms( std::vector<Term> terms )
{
    std::sort( terms.begin(), terms.end(),
               []( const Term &a, const Term &b ) { return a.var < b.var; } );
    std::vector<Term> out;
    for ( const Term &t : terms )
    {
        if ( !out.empty() && out.back().var == t.var )
            out.back().coeff += t.coeff;
        else
            out.push_back( t );
    }
    std::erase_if( out, []( const Term &t ) { return std::fabs( t.coeff ) < 1e-15; } );
    return out;
}

/*
  Dense per-layer linear form
      sum_i hat[i]^T h(i) + sum_i pre[i]^T x(i) + constant
  with hat[i] for i in 0..L-1 and pre[i] for i in 1..L.
*/
struct LayeredForm
{
    std::vector<Vector> hat;
    std::vector<Vector> pre;
    double constant = 0.0;

    static LayeredForm zeros( const Network &net )
    {
        LayeredForm f;
        unsigned L = net.numLayers();
        f.hat.resize( L + 1 );
        f.pre.resize( L + 1 );
        for ( unsigned i = 0; i <= L; ++i )
        {
            f.hat[i] = Vector::Zero( i < L ? net.width( i ) : 0 );
            f.pre[i] = Vector::Zero( i > 0 ? net.width( i ) : 0 );
        }
        return f;
    }

    void add( const VarRef &v, double coeff )
    {
        if ( v.kind == VarKind::Pre )
        {
            if ( v.layer == 0 || v.layer >= pre.size() || v.index >= pre[v.layer].size() )
                throw DimensionError( "term " + varName( v ) + " lies outside the network" );
            pre[v.layer][v.index] += coeff;
        }
        else
        {
            // h(L) coincides with x(L).
            if ( v.layer + 1 == hat.size() )
                return add( VarRef{ VarKind::Pre, v.layer, v.index }, coeff );
            if ( v.layer >= hat.size() || v.index >= hat[v.layer].size() )
                throw DimensionError( "term " + varName( v ) + " lies outside the network" );
            hat[v.layer][v.index] += coeff;
        }
    }

    bool isZero() const
    {
        for ( const Vector &v : hat )
            if ( v.size() && v.cwiseAbs().maxCoeff() != 0.0 )
                return false;
        for ( const Vector &v : pre )
            if ( v.size() && v.cwiseAbs().maxCoeff() != 0.0 )
                return false;
        return true;
    }

    LayeredForm operator-() const
    {
        LayeredForm f = *this;
        for ( Vector &v : f.hat )
            v = -v;
        for ( Vector &v : f.pre )
            v = -v;
        f.constant = -f.constant;
        return f;
    }

    double evaluate( const std::vector<Vector> &preValues, const std::vector<Vector> &postValues ) const
    {
        double v = constant;
        for ( size_t i = 0; i < hat.size(); ++i )
            if ( hat[i].size() )
                v += hat[i].dot( postValues[i] );
        for ( size_t i = 1; i < pre.size(); ++i )
            v += pre[i].dot( preValues[i] );
        return v;
    }
};

inline LayeredForm layeredForm( const Network &net, const std::vector<Term> &terms, double constant )
{
    LayeredForm f = LayeredForm::zeros( net );
    for ( const Term &t : terms )
        f.add( t.var, t.coeff );
    f.constant = constant;
    return f;
}

// A plane "a.v <= b" as the row "a.v - b <= 0".
inline LayeredForm planeRow( const Network &net, const HyperPlane &plane )
{
    return layeredForm( net, plane.terms, -plane.bias );
}

// The canonical output property "x(L) > 0" as the closed row "-x(L) <= 0".
inline LayeredForm outputRow( const Network &net )
{
    LayeredForm f = LayeredForm::zeros( net );
    f.pre[net.numLayers()][0] = -1.0;
    return f;
}

} // namespace pmnr
