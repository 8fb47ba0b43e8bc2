#pragma once

#include "pmnr/dualopt.hpp"
#include "pmnr/post_tighten.hpp"

#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

namespace pmnr {

enum class ScoreKind
{
    Nsse,
    Range, // u - l of the pre-activation bounds
};

enum class Variant
{
    Pmnr,
    PmnrAll,
    PmnrRandom,
};

struct NeuronScore
{
    unsigned layer = 0;
    unsigned index = 0;
    double score = 0.0;
};

struct NeuronGroup
{
    unsigned layer = 0;
    std::vector<unsigned> neurons;
    std::vector<double> scores;
};

struct PmnrConfig
{
    Variant variant = Variant::Pmnr;
    unsigned groupSize = 2;
    unsigned iterations = 10;
    PgdConfig pgd;
    unsigned alphaSteps = 20;
    std::uint64_t seed = 0;
    ScoreKind score = ScoreKind::Nsse;
    bool restrictBranches = false;
    bool sequential = true;

    void validate() const
    {
        if ( groupSize < 2 )
            throw PreconditionError( "group size must be at least 2" );
        if ( iterations < 1 )
            throw PreconditionError( "at least one main-loop iteration is required" );
        pgd.validate();
    }
};

/*
  NSSE: for every unfixed neuron and each of its phases, the output's upper
  and lower symbolic bounds are back-substituted to the neuron's layer with
  the phase's exact line in place of its relaxation, then concretized over
  that layer's pre-activation box with the neuron confined to the phase.
  The score is the mean output range over phases.
*/
inline std::vector<NeuronScore> nsseScores( const Network &net, const BoundsState &bounds, const SingleRelax &relax,
                                            ScoreKind kind = ScoreKind::Nsse )
{
    std::vector<NeuronScore> out;
    unsigned L = net.numLayers();
    for ( unsigned i = 1; i < L; ++i )
    {
        const Activation &act = net.layer( i ).activation;
        for ( unsigned j = 0; j < net.width( i ); ++j )
        {
            double l = bounds.pre[i].lower[j];
            double u = bounds.pre[i].upper[j];
            if ( !isUnfixed( act, l, u ) )
                continue;
            if ( kind == ScoreKind::Range )
            {
                out.push_back( { i, j, u - l } );
                continue;
            }
            double total = 0.0;
            std::vector<Phase> ph = phases( act, l, u );
            for ( const Phase &p : ph )
            {
                SingleRelax r = relax;
                r.setNeuron( i, j, p.exact );
                Interval box = bounds.pre[i];
                box.lower[j] = p.preLower;
                box.upper[j] = p.preUpper;
                double range = 0.0;
                for ( Eigen::Index o = 0; o < net.width( L ); ++o )
                {
                    Vector e = Vector::Zero( net.width( L ) );
                    e[o] = 1.0;
                    SymbolicBound up = backsubstitute( net, r, { L, e, 0.0, BoundDirection::Upper }, i );
                    SymbolicBound lo = backsubstitute( net, r, { L, e, 0.0, BoundDirection::Lower }, i );
                    range += concretize( up, box ) - concretize( lo, box );
                }
                total += range;
            }
            out.push_back( { i, j, total / static_cast<double>( ph.size() ) } );
        }
    }
    return out;
}

// Empty when no neuron is unfixed.
inline std::optional<NeuronGroup> selectNeurons( const Network &net, const std::vector<NeuronScore> &scores,
                                                 unsigned d, Variant variant = Variant::Pmnr,
                                                 std::uint64_t seed = 0 )
{
    if ( scores.empty() )
        return std::nullopt;
    std::map<unsigned, std::vector<NeuronScore>> byLayer;
    for ( const NeuronScore &s : scores )
        byLayer[s.layer].push_back( s );

    NeuronGroup group;
    std::vector<NeuronScore> chosen;
    if ( variant == Variant::PmnrRandom )
    {
        std::mt19937_64 rng( seed );
        std::vector<unsigned> layers;
        for ( const auto &[layer, list] : byLayer )
            layers.push_back( layer );
        std::uniform_int_distribution<size_t> pickLayer( 0, layers.size() - 1 );
        group.layer = layers[pickLayer( rng )];
        chosen = byLayer[group.layer];
        std::shuffle( chosen.begin(), chosen.end(), rng );
    }
    else
    {
        double best = -kInfinity;
        for ( const auto &[layer, list] : byLayer )
        {
            double sum = 0.0;
            for ( const NeuronScore &s : list )
                sum += s.score;
            if ( sum > best )
            {
                best = sum;
                group.layer = layer;
            }
        }
        chosen = byLayer[group.layer];
        std::stable_sort( chosen.begin(), chosen.end(),
                          []( const NeuronScore &a, const NeuronScore &b ) { return a.score > b.score; } );
    }
    if ( chosen.size() > d )
        chosen.resize( d );
    std::sort( chosen.begin(), chosen.end(),
               []( const NeuronScore &a, const NeuronScore &b ) { return a.index < b.index; } );
    for ( const NeuronScore &s : chosen )
    {
        group.neurons.push_back( s.index );
        group.scores.push_back( s.score );
    }
    (void)net;
    return group;
}

// Vectors in {-1,0,1}^d with at least two nonzero entries.
inline std::vector<std::vector<int>> enumerateEpsilons( unsigned d )
{
    if ( d < 2 )
        throw PreconditionError( "epsilon enumeration needs d >= 2" );
    if ( d > 12 )
        throw PreconditionError( "epsilon enumeration limited to d <= 12" );
    static const int digit[3] = { 1, -1, 0 };
    std::vector<std::vector<int>> out;
    unsigned total = 1;
    for ( unsigned k = 0; k < d; ++k )
        total *= 3;
    for ( unsigned code = 0; code < total; ++code )
    {
        std::vector<int> eps( d );
        unsigned c = code;
        unsigned nonzero = 0;
        for ( unsigned k = 0; k < d; ++k )
        {
            eps[k] = digit[c % 3];
            c /= 3;
            nonzero += eps[k] != 0;
        }
        if ( nonzero >= 2 )
            out.push_back( std::move( eps ) );
    }
    return out;
}

struct PlaneCandidate
{
    HyperPlane plane;
    double feasUpper = kInfinity; // interval upper bound of the left-hand side
    double feasLower = -kInfinity;
};

namespace detail {

inline std::pair<double, double> termsInterval( const Network &net, const BoundsState &bounds,
                                                const std::vector<Term> &terms )
{
    double lo = 0.0;
    double hi = 0.0;
    for ( const Term &t : terms )
    {
        Interval box = t.var.kind == VarKind::Pre ? bounds.pre[t.var.layer] : bounds.clippedPost( net, t.var.layer );
        double a = box.lower[t.var.index];
        double b = box.upper[t.var.index];
        lo += t.coeff > 0 ? t.coeff * a : t.coeff * b;
        hi += t.coeff > 0 ? t.coeff * b : t.coeff * a;
    }
    return { lo, hi };
}

inline bool sameTerms( const std::vector<Term> &a, const std::vector<Term> &b )
{
    if ( a.size() != b.size() )
        return false;
    for ( size_t k = 0; k < a.size(); ++k )
        if ( a[k].var != b[k].var || std::fabs( a[k].coeff - b[k].coeff ) > 1e-12 )
            return false;
    return true;
}

} // namespace detail

/*
  For each epsilon: the lower-line template sum eps_k (h_k - sl_k x_k) and the
  upper-line template with -eps, sum -eps_k (h_k - su_k x_k). Planes whose
  terms repeat an earlier one are dropped.
*/
inline std::vector<PlaneCandidate> initialPlanes( const Network &net, const BoundsState &bounds,
                                                  const SingleRelax &relax, const NeuronGroup &group,
                                                  const std::vector<std::vector<int>> &epsilons,
                                                  unsigned iteration = 0 )
{
    if ( group.neurons.empty() )
        throw PreconditionError( "empty neuron group" );
    std::vector<PlaneCandidate> out;
    unsigned l = group.layer;
    const LayerRelax &r = relax.layers[l];
    for ( const std::vector<int> &eps : epsilons )
    {
        if ( eps.size() != group.neurons.size() )
            throw DimensionError( "epsilon length differs from the group size" );
        for ( PlaneTemplate tmpl : { PlaneTemplate::Lower, PlaneTemplate::Upper } )
        {
            std::vector<int> e = eps;
            if ( tmpl == PlaneTemplate::Upper )
                for ( int &v : e )
                    v = -v;
            std::vector<Term> terms;
            for ( size_t k = 0; k < group.neurons.size(); ++k )
            {
                if ( e[k] == 0 )
                    continue;
                unsigned j = group.neurons[k];
                double slope = tmpl == PlaneTemplate::Upper ? r.upperSlope[j] : r.lowerSlope[j];
                terms.push_back( { { VarKind::Post, l, j }, double( e[k] ) } );
                terms.push_back( { { VarKind::Pre, l, j }, -double( e[k] ) * slope } );
            }
            terms = canonicalTerms( terms );
            bool duplicate = false;
            for ( const PlaneCandidate &c : out )
                duplicate = duplicate || detail::sameTerms( c.plane.terms, terms );
            if ( duplicate )
                continue;
            PlaneCandidate c;
            c.plane.terms = terms;
            c.plane.provenance = { e, tmpl, l, group.neurons, iteration };
            auto [lo, hi] = detail::termsInterval( net, bounds, terms );
            c.feasLower = lo;
            c.feasUpper = hi;
            c.plane.bias = hi;
            out.push_back( std::move( c ) );
        }
    }
    return out;
}

struct BranchCombination
{
    unsigned layer = 0;
    std::vector<unsigned> neurons;
    std::vector<unsigned> phases;

    friend bool operator==( const BranchCombination &, const BranchCombination & ) = default;
};

struct GenerateResult
{
    std::vector<HyperPlane> planes;
    std::vector<BranchCombination> infeasible;
    unsigned dualSolves = 0;
};

inline void addBranch( std::vector<BranchCombination> &list, const BranchCombination &b )
{
    if ( std::find( list.begin(), list.end(), b ) == list.end() )
        list.push_back( b );
}

/*
  BHSO. Each plane "lhs <= d" is optimized as a lower bound t on -lhs over
  the relaxation: once with the unfixed relaxations, then once per branch
  combination of the group with exact phase lines substituted. The bias is
  -max(t_unbranched, min over branches). A branch whose bound exceeds the
  interval upper bound of -lhs admits no trace and is reported infeasible.
*/
inline GenerateResult generatePmnr( const Network &net, const InputDomain &domain, const BoundsState &bounds,
                                    const SingleRelax &relax, const NeuronGroup &group,
                                    const std::vector<HyperPlane> &priorPlanes, const PmnrConfig &cfg,
                                    unsigned iteration = 0, const LpSolver &solver = defaultLpSolver() )
{
    GenerateResult result;
    if ( group.neurons.size() < 2 )
        return result;
    std::vector<PlaneCandidate> candidates = initialPlanes(
        net, bounds, relax, group, enumerateEpsilons( static_cast<unsigned>( group.neurons.size() ) ), iteration );

    const Activation &act = net.layer( group.layer ).activation;
    std::vector<std::vector<Phase>> memberPhases;
    for ( unsigned j : group.neurons )
        memberPhases.push_back( phases( act, bounds.pre[group.layer].lower[j], bounds.pre[group.layer].upper[j] ) );

    ConstraintPolyhedron base;
    for ( const HyperPlane &p : priorPlanes )
        base.rows.push_back( planeRow( net, p ) );

    for ( PlaneCandidate &cand : candidates )
    {
        ConstraintPolyhedron poly = base;
        if ( cfg.sequential )
            for ( const HyperPlane &p : result.planes )
                poly.rows.push_back( planeRow( net, p ) );
        LayeredForm objective = -layeredForm( net, cand.plane.terms, 0.0 );

        double tOpt = DualProblem( net, relax, bounds, domain, poly, objective, solver ).maximize( cfg.pgd ).value;
        ++result.dualSolves;

        double combined = kInfinity;
        std::vector<unsigned> pick( group.neurons.size(), 0 );
        while ( true )
        {
            SingleRelax br = relax;
            ConstraintPolyhedron bpoly = poly;
            for ( size_t k = 0; k < pick.size(); ++k )
            {
                const Phase &ph = memberPhases[k][pick[k]];
                br.setNeuron( group.layer, group.neurons[k], ph.exact );
                if ( cfg.restrictBranches )
                {
                    LayeredForm row = LayeredForm::zeros( net );
                    if ( ph.preUpper <= 0.0 )
                        row.pre[group.layer][group.neurons[k]] = 1.0;
                    else
                        row.pre[group.layer][group.neurons[k]] = -1.0;
                    bpoly.rows.push_back( row );
                }
            }
            DualProblem dual( net, br, bounds, domain, bpoly, objective, solver );
            for ( unsigned j : group.neurons )
                dual.freezeAlpha( group.layer, j );
            double tb = dual.maximize( cfg.pgd ).value;
            ++result.dualSolves;
            if ( tb > -cand.feasLower + 1e-7 * std::max( 1.0, std::fabs( tb ) ) )
                addBranch( result.infeasible, { group.layer, group.neurons, pick } );
            combined = std::min( combined, tb );

            size_t k = 0;
            while ( k < pick.size() && ++pick[k] == memberPhases[k].size() )
                pick[k++] = 0;
            if ( k == pick.size() )
                break;
        }

        double t = std::max( tOpt, combined );
        cand.plane.bias = std::min( -t, cand.feasUpper );
        result.planes.push_back( cand.plane );
    }
    return result;
}

// Adds planes, keeping the smaller bias when the terms repeat.
inline void mergePlanes( std::vector<HyperPlane> &into, const std::vector<HyperPlane> &planes )
{
    for ( const HyperPlane &p : planes )
    {
        auto it = std::find_if( into.begin(), into.end(),
                                [&]( const HyperPlane &q ) { return detail::sameTerms( q.terms, p.terms ); } );
        if ( it == into.end() )
            into.push_back( p );
        else if ( p.bias < it->bias )
            *it = p;
    }
}

// Sliding windows of d consecutive unfixed neurons per layer.
inline std::vector<NeuronGroup> pmnrAllGroups( const Network &net, const BoundsState &bounds, unsigned d )
{
    if ( d < 2 )
        throw PreconditionError( "group size must be at least 2" );
    std::vector<NeuronGroup> groups;
    for ( unsigned i = 1; i < net.numLayers(); ++i )
    {
        std::vector<unsigned> unfixed;
        for ( unsigned j = 0; j < net.width( i ); ++j )
            if ( isUnfixed( net.layer( i ).activation, bounds.pre[i].lower[j], bounds.pre[i].upper[j] ) )
                unfixed.push_back( j );
        if ( unfixed.size() < 2 )
            continue;
        if ( unfixed.size() <= d )
        {
            groups.push_back( { i, unfixed, {} } );
            continue;
        }
        for ( size_t s = 0; s + d <= unfixed.size(); ++s )
            groups.push_back( { i, std::vector<unsigned>( unfixed.begin() + s, unfixed.begin() + s + d ), {} } );
    }
    return groups;
}

struct AlphaChoice
{
    AlphaSet select;
    AlphaSet gener;
    AlphaSet final;
    double initialObjective = -kInfinity;
    double finalObjective = -kInfinity;
};

/*
  select and gener keep the initial slopes. final is the best of a short
  projected-gradient run on the output bound in the given direction (Lower
  maximizes the lower bound, Upper minimizes the upper bound). The objective
  values are reported as lower bounds of x(L) or of -x(L).
*/
inline AlphaChoice pickAlphas( const Network &net, const InputDomain &domain, const BoundsState &bounds,
                               const SingleRelax &relax, BoundDirection target, unsigned steps = 20,
                               double step = 0.1, const LpSolver &solver = defaultLpSolver() )
{
    AlphaChoice choice;
    unsigned L = net.numLayers();
    choice.select.assign( L + 1, Vector() );
    for ( unsigned i = 1; i < L; ++i )
        choice.select[i] = relax.layers[i].lowerSlope;
    choice.gener = choice.select;
    choice.final = choice.select;
    if ( steps == 0 )
        return choice;

    LayeredForm objective = LayeredForm::zeros( net );
    objective.pre[L][0] = target == BoundDirection::Lower ? 1.0 : -1.0;
    DualProblem dual( net, relax, bounds, domain, ConstraintPolyhedron{}, objective, solver );
    choice.initialObjective = dual.value( Vector(), choice.select );
    PgdConfig cfg;
    cfg.iterations = steps;
    cfg.step = step;
    DualState best = dual.maximize( cfg, &choice.select );
    choice.finalObjective = best.value;
    choice.final = best.alpha;
    return choice;
}

struct IterationLog
{
    unsigned iteration = 0;
    std::vector<NeuronGroup> groups;
    unsigned planes = 0;
    double revision = 0.0;
    TightenStats stats;
};

struct PmnrResult
{
    BoundsState bounds;
    BoundsState initial; // first single-neuron pass
    std::vector<HyperPlane> planes;
    std::vector<BranchCombination> infeasible;
    std::vector<IterationLog> log;
    unsigned iterations = 0;

    bool contradiction() const
    {
        return bounds.contradiction;
    }
};

enum class TightenMethod
{
    DeepPoly,
    Fbc,
    Pmnr,
    PmnrAll,
    PmnrRandom,
};

namespace detail {

inline void applyOutputConstraint( BoundsState &b )
{
    if ( b.contradiction )
        return;
    Interval &out = b.pre.back();
    if ( out.upper[0] < 0.0 )
        b.contradiction = true;
    else
    {
        out.lower[0] = std::max( out.lower[0], 0.0 );
        b.post.back() = out;
    }
}

/*
  Main loop on a canonical network ("exists x with x(L) > 0"). When
  `withPlanes` is false only the relaxed-LP tightening runs.
*/
inline PmnrResult tightenLoop( const Network &net, const InputDomain &domain, bool outputConstraint,
                               const PmnrConfig &cfg, bool withPlanes, const LpSolver &solver )
{
    cfg.validate();
    if ( net.outputSize() != 1 )
        throw PreconditionError( "tightening loop requires a single-output network" );
    PmnrResult result;
    std::optional<BoundsState> prior;
    std::uint64_t seed = cfg.seed;
    for ( unsigned it = 1; it <= cfg.iterations; ++it )
    {
        IterationLog entry;
        entry.iteration = it;
        DeepPolyResult dp = deepPoly( net, domain, nullptr, prior ? &*prior : nullptr, solver );
        if ( outputConstraint )
            applyOutputConstraint( dp.bounds );
        if ( it == 1 )
            result.initial = dp.bounds;
        result.iterations = it;
        if ( dp.bounds.contradiction )
        {
            result.bounds = dp.bounds;
            result.log.push_back( entry );
            return result;
        }

        std::vector<const SingleRelax *> relaxes;
        SingleRelax finalRelax;
        if ( withPlanes )
        {
            AlphaChoice alphas =
                pickAlphas( net, domain, dp.bounds, dp.relax, BoundDirection::Lower, cfg.alphaSteps, cfg.pgd.step,
                            solver );
            finalRelax = buildRelax( net, dp.bounds, alphas.final );
            relaxes.push_back( &finalRelax );

            std::vector<NeuronGroup> groups;
            if ( cfg.variant == Variant::PmnrAll )
                groups = pmnrAllGroups( net, dp.bounds, cfg.groupSize );
            else
            {
                std::vector<NeuronScore> scores = nsseScores( net, dp.bounds, dp.relax, cfg.score );
                if ( auto g = selectNeurons( net, scores, cfg.groupSize, cfg.variant, seed++ ) )
                    groups.push_back( *g );
            }
            for ( const NeuronGroup &g : groups )
            {
                if ( g.neurons.size() < 2 )
                    continue;
                GenerateResult gen = generatePmnr( net, domain, dp.bounds, dp.relax, g, result.planes, cfg, it, solver );
                mergePlanes( result.planes, gen.planes );
                for ( const BranchCombination &b : gen.infeasible )
                    addBranch( result.infeasible, b );
                entry.planes += static_cast<unsigned>( gen.planes.size() );
            }
            entry.groups = groups;
        }
        relaxes.push_back( &dp.relax );

        BoundsState before = prior ? *prior : dp.bounds;
        BoundsState tightened =
            postTighten( net, domain, outputConstraint, dp.bounds, relaxes, result.planes, solver, &entry.stats );
        entry.revision = maxRevision( before, tightened );
        result.bounds = tightened;
        prior = tightened;
        result.log.push_back( entry );
        if ( tightened.contradiction || entry.revision <= 1e-7 )
            break;
    }
    return result;
}

} // namespace detail

inline PmnrResult pmnrLoop( const Network &canonical, const InputDomain &domain, bool outputConstraint,
                            const PmnrConfig &cfg = {}, const LpSolver &solver = defaultLpSolver() )
{
    return detail::tightenLoop( canonical, domain, outputConstraint, cfg, true, solver );
}

inline PmnrResult pmnrLoop( const Query &query, const PmnrConfig &cfg = {}, bool outputConstraint = true,
                            const LpSolver &solver = defaultLpSolver() )
{
    query.validate();
    return pmnrLoop( query.canonicalNetwork(), query.input, outputConstraint, cfg, solver );
}

inline PmnrResult fbcTighten( const Network &canonical, const InputDomain &domain, bool outputConstraint,
                              unsigned iterations = 10, const LpSolver &solver = defaultLpSolver() )
{
    PmnrConfig cfg;
    cfg.iterations = iterations;
    return detail::tightenLoop( canonical, domain, outputConstraint, cfg, false, solver );
}

// Single-neuron pass only, with the optional output restriction.
inline PmnrResult deepPolyTighten( const Network &canonical, const InputDomain &domain, bool outputConstraint,
                                   const LpSolver &solver = defaultLpSolver() )
{
    PmnrResult result;
    result.bounds = deepPoly( canonical, domain, nullptr, nullptr, solver ).bounds;
    if ( outputConstraint )
        detail::applyOutputConstraint( result.bounds );
    result.initial = result.bounds;
    result.iterations = 1;
    return result;
}

inline PmnrResult tighten( const Network &canonical, const InputDomain &domain, bool outputConstraint,
                           TightenMethod method, const PmnrConfig &cfg = {},
                           const LpSolver &solver = defaultLpSolver() )
{
    switch ( method )
    {
    case TightenMethod::DeepPoly:
        return deepPolyTighten( canonical, domain, outputConstraint, solver );
    case TightenMethod::Fbc:
        return fbcTighten( canonical, domain, outputConstraint, cfg.iterations, solver );
    case TightenMethod::Pmnr:
    case TightenMethod::PmnrAll:
    case TightenMethod::PmnrRandom:
    {
        PmnrConfig c = cfg;
        c.variant = method == TightenMethod::Pmnr
                        ? Variant::Pmnr
                        : ( method == TightenMethod::PmnrAll ? Variant::PmnrAll : Variant::PmnrRandom );
        return pmnrLoop( canonical, domain, outputConstraint, c, solver );
    }
    }
    return {};
}

// Output interval of the original network from canonical bounds.
inline Interval originalOutputInterval( const Query &query, const Interval &canonical )
{
    double a = query.originalOutput( canonical.lower[0] );
    double b = query.originalOutput( canonical.upper[0] );
    return { Vector::Constant( 1, std::min( a, b ) ), Vector::Constant( 1, std::max( a, b ) ) };
}

} // namespace pmnr
