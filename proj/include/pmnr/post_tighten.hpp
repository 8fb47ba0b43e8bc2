#pragma once

#include "pmnr/linear_form.hpp"
#include "pmnr/sbt.hpp"

#include <optional>
#include <vector>

namespace pmnr {

/*
  Relaxed LP over a contiguous band of layers [lo, hi]. Variables are h(i)
  for lo <= i <= min(hi, L-1) and x(i) for max(lo,1) <= i <= hi, plus
  auxiliaries for l1-ball inputs. Constraints: affine equalities whose
  inputs lie in the band, relaxation lines of every supplied relaxation set,
  planes whose variables lie in the band, the input domain when lo == 0,
  and the canonical output row x(L) >= 0 when requested and hi == L.
*/
struct LpEncoding
{
    LinearProgram lp;
    std::vector<int> preOffset;  // -1 when x(i) is absent
    std::vector<int> postOffset; // -1 when h(i) is absent
    unsigned lo = 0;
    unsigned hi = 0;

    int index( const VarRef &v ) const
    {
        if ( v.kind == VarKind::Pre )
            return preOffset[v.layer] < 0 ? -1 : preOffset[v.layer] + static_cast<int>( v.index );
        if ( v.layer + 1 == postOffset.size() )
            return index( VarRef{ VarKind::Pre, v.layer, v.index } );
        return postOffset[v.layer] < 0 ? -1 : postOffset[v.layer] + static_cast<int>( v.index );
    }

    bool covers( const HyperPlane &plane ) const
    {
        for ( const Term &t : plane.terms )
            if ( index( t.var ) < 0 )
                return false;
        return true;
    }
};

struct EncodeOptions
{
    unsigned lo = 0;
    unsigned hi = ~0u;
    bool outputConstraint = false;
    bool clipPost = true;
};

inline LpEncoding encodeRelaxed( const Network &net, const BoundsState &bounds,
                                 const std::vector<const SingleRelax *> &relaxes,
                                 const std::vector<HyperPlane> &planes, const InputDomain &domain,
                                 const EncodeOptions &options = {} )
{
    unsigned L = net.numLayers();
    LpEncoding enc;
    enc.lo = options.lo;
    enc.hi = std::min( options.hi, L );
    if ( enc.lo > enc.hi )
        throw PreconditionError( "empty layer band" );
    enc.preOffset.assign( L + 1, -1 );
    enc.postOffset.assign( L + 1, -1 );

    int count = 0;
    for ( unsigned i = enc.lo; i <= std::min( enc.hi, L - 1 ); ++i )
    {
        enc.postOffset[i] = count;
        count += net.width( i );
    }
    for ( unsigned i = std::max( enc.lo, 1u ); i <= enc.hi; ++i )
    {
        enc.preOffset[i] = count;
        count += net.width( i );
    }

    const LpBall *l1Ball = nullptr;
    if ( enc.lo == 0 )
        if ( const LpBall *ball = std::get_if<LpBall>( &domain ) )
            if ( ball->p == 1.0 )
                l1Ball = ball;
    int auxOffset = count;
    if ( l1Ball )
        count += static_cast<int>( l1Ball->center.size() );

    LinearProgram &lp = enc.lp;
    lp = LinearProgram( count );

    // Variable bounds.
    for ( unsigned i = 0; i <= L; ++i )
    {
        if ( enc.postOffset[i] >= 0 )
        {
            Interval box = options.clipPost ? bounds.clippedPost( net, i ) : bounds.post[i];
            for ( unsigned j = 0; j < net.width( i ); ++j )
            {
                lp.lower[enc.postOffset[i] + j] = box.lower[j];
                lp.upper[enc.postOffset[i] + j] = box.upper[j];
            }
        }
        if ( enc.preOffset[i] >= 0 )
            for ( unsigned j = 0; j < net.width( i ); ++j )
            {
                lp.lower[enc.preOffset[i] + j] = bounds.pre[i].lower[j];
                lp.upper[enc.preOffset[i] + j] = bounds.pre[i].upper[j];
            }
    }

    // Affine layers.
    for ( unsigned i = std::max( enc.lo + 1, 1u ); i <= enc.hi; ++i )
    {
        const Layer &layer = net.layer( i );
        for ( unsigned j = 0; j < net.width( i ); ++j )
        {
            Vector row = Vector::Zero( count );
            row[enc.preOffset[i] + j] = 1.0;
            for ( unsigned k = 0; k < net.width( i - 1 ); ++k )
                row[enc.postOffset[i - 1] + k] = -layer.weights( j, k );
            lp.addConstraint( std::move( row ), Relation::Equal, layer.bias[j] );
        }
    }

    // Relaxation lines.
    for ( unsigned i = std::max( enc.lo, 1u ); i <= std::min( enc.hi, L - 1 ); ++i )
        for ( const SingleRelax *relax : relaxes )
        {
            const LayerRelax &r = relax->layers[i];
            for ( unsigned j = 0; j < net.width( i ); ++j )
            {
                int h = enc.postOffset[i] + j;
                int x = enc.preOffset[i] + j;
                if ( r.lowerSlope[j] == r.upperSlope[j] && r.lowerOffset[j] == r.upperOffset[j] )
                {
                    Vector row = Vector::Zero( count );
                    row[h] = 1.0;
                    row[x] = -r.lowerSlope[j];
                    lp.addConstraint( std::move( row ), Relation::Equal, r.lowerOffset[j] );
                    continue;
                }
                Vector low = Vector::Zero( count );
                low[h] = 1.0;
                low[x] = -r.lowerSlope[j];
                lp.addConstraint( std::move( low ), Relation::GreaterEqual, r.lowerOffset[j] );
                Vector up = Vector::Zero( count );
                up[h] = 1.0;
                up[x] = -r.upperSlope[j];
                lp.addConstraint( std::move( up ), Relation::LessEqual, r.upperOffset[j] );
            }
        }

    // Planes.
    for ( const HyperPlane &plane : planes )
    {
        if ( !enc.covers( plane ) )
            continue;
        Vector row = Vector::Zero( count );
        for ( const Term &t : plane.terms )
            row[enc.index( t.var )] += t.coeff;
        lp.addConstraint( std::move( row ), Relation::LessEqual, plane.bias );
    }

    // Input domain.
    if ( enc.lo == 0 )
    {
        int in = enc.postOffset[0];
        if ( const Polyhedron *poly = std::get_if<Polyhedron>( &domain ) )
            for ( Eigen::Index r = 0; r < poly->A.rows(); ++r )
            {
                Vector row = Vector::Zero( count );
                for ( Eigen::Index k = 0; k < poly->A.cols(); ++k )
                    row[in + k] = poly->A( r, k );
                lp.addConstraint( std::move( row ), Relation::LessEqual, -poly->b[r] );
            }
        if ( l1Ball )
        {
            Eigen::Index n = l1Ball->center.size();
            Vector total = Vector::Zero( count );
            for ( Eigen::Index k = 0; k < n; ++k )
            {
                lp.lower[auxOffset + k] = 0.0;
                // t_k >= x_k - c_k and t_k >= c_k - x_k
                Vector a = Vector::Zero( count );
                a[auxOffset + k] = 1.0;
                a[in + k] = -1.0;
                lp.addConstraint( a, Relation::GreaterEqual, -l1Ball->center[k] );
                Vector b = Vector::Zero( count );
                b[auxOffset + k] = 1.0;
                b[in + k] = 1.0;
                lp.addConstraint( b, Relation::GreaterEqual, l1Ball->center[k] );
                total[auxOffset + k] = 1.0;
            }
            lp.addConstraint( total, Relation::LessEqual, l1Ball->radius );
        }
    }

    if ( options.outputConstraint && enc.hi == L )
    {
        Vector row = Vector::Zero( count );
        row[enc.preOffset[L]] = 1.0;
        lp.addConstraint( std::move( row ), Relation::GreaterEqual, 0.0 );
    }
    return enc;
}

struct TightenStats
{
    unsigned lpSolved = 0;
    unsigned lpStalled = 0;
    unsigned revised = 0;
};

namespace detail {

// Returns false when the program is infeasible.
inline bool tightenVariable( LpEncoding &enc, int var, double &lower, double &upper, const LpSolver &solver,
                             TightenStats &stats )
{
    LinearProgram &lp = enc.lp;
    for ( Sense sense : { Sense::Minimize, Sense::Maximize } )
    {
        lp.objective.setZero();
        lp.objective[var] = 1.0;
        lp.sense = sense;
        LpOutcome out;
        try
        {
            out = solver( lp );
        }
        catch ( const LpStalled & )
        {
            ++stats.lpStalled;
            continue;
        }
        ++stats.lpSolved;
        if ( out.status == LpStatus::Infeasible )
            return false;
        if ( out.status != LpStatus::Optimal )
            continue;
        // Guard against round-off: never move past the solver's own point.
        double v = out.value;
        if ( sense == Sense::Minimize && v > lower + 1e-7 )
        {
            lower = v - 1e-9 * std::max( 1.0, std::fabs( v ) );
            ++stats.revised;
        }
        else if ( sense == Sense::Maximize && v < upper - 1e-7 )
        {
            upper = v + 1e-9 * std::max( 1.0, std::fabs( v ) );
            ++stats.revised;
        }
    }
    if ( lower > upper )
        return false;
    return true;
}

inline void markContradiction( BoundsState &b )
{
    b.contradiction = true;
}

inline void refreshPost( const Network &net, BoundsState &b, unsigned k )
{
    if ( k >= net.numLayers() )
    {
        b.post[k] = b.pre[k];
        return;
    }
    const Activation &act = net.layer( k ).activation;
    for ( unsigned j = 0; j < net.width( k ); ++j )
    {
        auto [lo, hi] = activationImage( act, b.pre[k].lower[j], b.pre[k].upper[j] );
        b.post[k].lower[j] = std::max( b.post[k].lower[j], lo );
        b.post[k].upper[j] = std::min( b.post[k].upper[j], hi );
        if ( b.post[k].lower[j] > b.post[k].upper[j] )
            b.contradiction = true;
    }
}

} // namespace detail

/*
  One forward sweep (layers 1..L, constraints within layers <= k) and one
  backward sweep (layers L..1, constraints within layers >= k). Each neuron
  gets a min and a max LP; results are intersected with the incoming bounds.
*/
inline BoundsState postTighten( const Network &net, const InputDomain &domain, bool outputConstraint,
                                const BoundsState &bounds, const std::vector<const SingleRelax *> &relaxes,
                                const std::vector<HyperPlane> &planes, const LpSolver &solver = defaultLpSolver(),
                                TightenStats *statsOut = nullptr )
{
    BoundsState b = bounds;
    TightenStats stats;
    if ( b.contradiction )
        return b;
    unsigned L = net.numLayers();

    auto sweep = [&]( unsigned k, unsigned lo, unsigned hi ) {
        EncodeOptions opts;
        opts.lo = lo;
        opts.hi = hi;
        opts.outputConstraint = outputConstraint;
        LpEncoding enc = encodeRelaxed( net, b, relaxes, planes, domain, opts );
        for ( unsigned j = 0; j < net.width( k ); ++j )
        {
            int var = enc.index( VarRef{ VarKind::Pre, k, j } );
            if ( !detail::tightenVariable( enc, var, b.pre[k].lower[j], b.pre[k].upper[j], solver, stats ) )
            {
                detail::markContradiction( b );
                return;
            }
            enc.lp.lower[var] = b.pre[k].lower[j];
            enc.lp.upper[var] = b.pre[k].upper[j];
        }
        detail::refreshPost( net, b, k );
    };

    for ( unsigned k = 1; k <= L && !b.contradiction; ++k )
        sweep( k, 0, k );
    for ( unsigned k = L; k >= 1 && !b.contradiction; --k )
        sweep( k, k, L );

    if ( statsOut )
    {
        statsOut->lpSolved += stats.lpSolved;
        statsOut->lpStalled += stats.lpStalled;
        statsOut->revised += stats.revised;
    }
    return b;
}

// Largest improvement of any bound between two states.
inline double maxRevision( const BoundsState &before, const BoundsState &after )
{
    if ( after.contradiction != before.contradiction )
        return kInfinity;
    double worst = 0.0;
    for ( size_t i = 0; i < before.pre.size(); ++i )
    {
        auto gain = []( const Interval &a, const Interval &b ) {
            double g = 0.0;
            for ( Eigen::Index j = 0; j < a.size(); ++j )
            {
                double lo = b.lower[j] - a.lower[j];
                double hi = a.upper[j] - b.upper[j];
                if ( std::isinf( a.lower[j] ) && std::isfinite( b.lower[j] ) )
                    lo = kInfinity;
                if ( std::isinf( a.upper[j] ) && std::isfinite( b.upper[j] ) )
                    hi = kInfinity;
                g = std::max( { g, lo, hi } );
            }
            return g;
        };
        worst = std::max( { worst, gain( before.pre[i], after.pre[i] ), gain( before.post[i], after.post[i] ) } );
    }
    return worst;
}

} // namespace pmnr
