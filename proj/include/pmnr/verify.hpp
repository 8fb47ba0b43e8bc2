#pragma once

#include "pmnr/pmnr.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

namespace pmnr {

enum class VerdictStatus
{
    Sat,
    Unsat,
    Unknown,
};

inline std::string verdictName( VerdictStatus s )
{
    switch ( s )
    {
    case VerdictStatus::Sat:
        return "SAT";
    case VerdictStatus::Unsat:
        return "UNSAT";
    case VerdictStatus::Unknown:
        return "UNKNOWN";
    }
    return "UNKNOWN";
}

struct VerifyStats
{
    unsigned subproblems = 0;
    unsigned tightenCalls = 0;
    double wallTime = 0.0;
};

struct Verdict
{
    VerdictStatus status = VerdictStatus::Unknown;
    Vector witness;
    std::string reason;
    VerifyStats stats;
};

// Phase assignment of one neuron.
struct Fixing
{
    unsigned layer = 0;
    unsigned index = 0;
    unsigned phase = 0;

    friend bool operator==( const Fixing &, const Fixing & ) = default;
};

// Canonical witness check: x in the domain and N'(x) > 0.
inline bool isWitness( const Network &canonical, const InputDomain &domain, const Vector &x )
{
    if ( !domainContains( domain, x, 0.0 ) )
        return false;
    return evaluate( canonical, x )[0] > 0.0;
}

namespace detail {

inline void requireExactDomain( const InputDomain &domain )
{
    if ( const LpBall *ball = std::get_if<LpBall>( &domain ) )
        if ( !std::isinf( ball->p ) && ball->p != 1.0 )
            throw PreconditionError( "exact pattern search needs a box, l1, linf or polyhedral input domain" );
}

// Exact piece of a piecewise-linear activation: phase 0 is x <= 0, phase 1 is x >= 0.
inline NeuronRelax phasePiece( const Activation &act, unsigned phase )
{
    if ( phase == 1 || act.type == ActivationType::Identity )
        return linearPiece( 1.0 );
    if ( act.type == ActivationType::Abs )
        return linearPiece( -1.0 );
    return linearPiece( act.type == ActivationType::LeakyRelu ? act.slope : 0.0 );
}

// Confines a neuron's pre-activation interval to one phase; false if empty.
inline bool restrictToPhase( BoundsState &b, const Fixing &f )
{
    double &l = b.pre[f.layer].lower[f.index];
    double &u = b.pre[f.layer].upper[f.index];
    if ( f.phase == 0 )
        u = std::min( u, 0.0 );
    else
        l = std::max( l, 0.0 );
    return l <= u;
}

// Pulls an LP point that sits on the boundary back into the domain.
inline Vector projectIntoDomain( const InputDomain &domain, Vector x )
{
    if ( const Box *box = std::get_if<Box>( &domain ) )
        return x.cwiseMax( box->lower ).cwiseMin( box->upper );
    if ( const LpBall *ball = std::get_if<LpBall>( &domain ) )
    {
        if ( std::isinf( ball->p ) )
        {
            Vector r = Vector::Constant( x.size(), ball->radius );
            return x.cwiseMax( ball->center - r ).cwiseMin( ball->center + r );
        }
        double n = norm( x - ball->center, ball->p );
        if ( n > ball->radius )
            x = ball->center + ( x - ball->center ) * ( ball->radius / n );
    }
    return x;
}

/*
  Exhaustive phase search. Unassigned unfixed neurons use the triangle
  relaxation (both extreme lower lines); assigned ones use their exact
  piece. A leaf with every listed neuron assigned is an exact LP.
*/
class PatternSearch
{
public:
    PatternSearch( const Network &net, const InputDomain &domain, const BoundsState &bounds,
                   std::vector<Fixing> neurons, const LpSolver &solver )
        : _net( net )
        , _domain( domain )
        , _bounds( bounds )
        , _neurons( std::move( neurons ) )
        , _solver( solver )
    {
        requireExactDomain( domain );
        AlphaSet lo( net.numLayers() + 1 ), hi( net.numLayers() + 1 );
        for ( unsigned i = 1; i < net.numLayers(); ++i )
        {
            auto [a, b] = alphaRange( net.layer( i ).activation );
            lo[i] = Vector::Constant( net.width( i ), a );
            hi[i] = Vector::Constant( net.width( i ), b );
        }
        _low = buildRelax( net, bounds, lo );
        _high = buildRelax( net, bounds, hi );
    }

    size_t size() const
    {
        return _neurons.size();
    }

    // Program for a partial assignment (phase < 0 means free); nullopt if a
    // phase interval is empty.
    std::optional<LpEncoding> program( const std::vector<int> &assignment, const std::vector<Fixing> &extra ) const
    {
        BoundsState b = _bounds;
        SingleRelax low = _low;
        SingleRelax high = _high;
        auto apply = [&]( const Fixing &f ) {
            if ( !restrictToPhase( b, f ) )
                return false;
            NeuronRelax piece = phasePiece( _net.layer( f.layer ).activation, f.phase );
            low.setNeuron( f.layer, f.index, piece );
            high.setNeuron( f.layer, f.index, piece );
            return true;
        };
        for ( size_t k = 0; k < _neurons.size(); ++k )
            if ( assignment[k] >= 0 && !apply( { _neurons[k].layer, _neurons[k].index, unsigned( assignment[k] ) } ) )
                return std::nullopt;
        for ( const Fixing &f : extra )
            if ( !apply( f ) )
                return std::nullopt;
        return encodeRelaxed( _net, b, { &low, &high }, {}, _domain );
    }

    /*
      Depth-first search maximizing `objective` (a pre-activation variable)
      or, without an objective, looking for any feasible leaf. `onLeaf`
      returns true to stop the search.
    */
    template <typename Leaf>
    void search( const std::optional<VarRef> &objective, const std::vector<Fixing> &extra, double &best,
                 Leaf &&onLeaf ) const
    {
        std::vector<int> assignment( _neurons.size(), -1 );
        bool stop = false;
        visit( 0, assignment, objective, extra, best, onLeaf, stop );
    }

private:
    const Network &_net;
    InputDomain _domain;
    BoundsState _bounds;
    std::vector<Fixing> _neurons;
    LpSolver _solver;
    SingleRelax _low;
    SingleRelax _high;

    template <typename Leaf>
    void visit( size_t depth, std::vector<int> &assignment, const std::optional<VarRef> &objective,
                const std::vector<Fixing> &extra, double &best, Leaf &onLeaf, bool &stop ) const
    {
        if ( stop )
            return;
        std::optional<LpEncoding> enc = program( assignment, extra );
        if ( !enc )
            return;
        enc->lp.objective.setZero();
        enc->lp.sense = Sense::Maximize;
        if ( objective )
            enc->lp.objective[enc->index( *objective )] = 1.0;
        LpOutcome out = _solver( enc->lp );
        if ( out.status == LpStatus::Infeasible )
            return;
        if ( out.status != LpStatus::Optimal )
            throw PreconditionError( "pattern program is unbounded" );
        if ( objective && out.value <= best )
            return;
        if ( depth == _neurons.size() )
        {
            Vector input = projectIntoDomain( _domain, out.point.segment( enc->postOffset[0], _net.inputSize() ) );
            if ( onLeaf( out.value, input ) )
                stop = true;
            return;
        }
        for ( int phase : { 1, 0 } )
        {
            assignment[depth] = phase;
            visit( depth + 1, assignment, objective, extra, best, onLeaf, stop );
            if ( stop )
                break;
        }
        assignment[depth] = -1;
    }
};

inline std::vector<Fixing> unfixedNeurons( const Network &net, const BoundsState &b, unsigned belowLayer = ~0u )
{
    std::vector<Fixing> out;
    for ( unsigned i = 1; i < net.numLayers() && i < belowLayer; ++i )
        for ( unsigned j = 0; j < net.width( i ); ++j )
            if ( isUnfixed( net.layer( i ).activation, b.pre[i].lower[j], b.pre[i].upper[j] ) )
                out.push_back( { i, j, 0 } );
    return out;
}

} // namespace detail

/*
  Exact verdict for "exists x in D with N'(x) > 0" on a canonical network by
  enumerating activation patterns of the unfixed neurons.
*/
inline Verdict patternOracle( const Network &canonical, const InputDomain &domain, unsigned maxUnfixed = 12,
                              const LpSolver &solver = defaultLpSolver() )
{
    auto start = std::chrono::steady_clock::now();
    detail::requireExactDomain( domain );
    BoundsState b = deepPoly( canonical, domain, nullptr, nullptr, solver ).bounds;
    std::vector<Fixing> unfixed = detail::unfixedNeurons( canonical, b );
    if ( unfixed.size() > maxUnfixed )
        throw PreconditionError( "pattern oracle refuses " + std::to_string( unfixed.size() ) +
                                 " unfixed neurons (limit " + std::to_string( maxUnfixed ) + ")" );
    detail::PatternSearch search( canonical, domain, b, unfixed, solver );
    Verdict v;
    double best = 0.0; // only leaves with a positive output matter
    bool borderline = false;
    search.search( VarRef{ VarKind::Pre, canonical.numLayers(), 0 }, {}, best, [&]( double value, const Vector &x ) {
        ++v.stats.subproblems;
        if ( isWitness( canonical, domain, x ) )
        {
            v.status = VerdictStatus::Sat;
            v.witness = x;
            return true;
        }
        if ( value > 1e-9 )
            borderline = true;
        return false;
    } );
    if ( v.status != VerdictStatus::Sat )
    {
        v.status = borderline ? VerdictStatus::Unknown : VerdictStatus::Unsat;
        if ( borderline )
            v.reason = "optimum within solver tolerance of the threshold";
    }
    v.stats.wallTime = std::chrono::duration<double>( std::chrono::steady_clock::now() - start ).count();
    return v;
}

inline Verdict patternOracle( const Query &query, unsigned maxUnfixed = 12 )
{
    query.validate();
    return patternOracle( query.canonicalNetwork(), query.input, maxUnfixed );
}

// Exact range of one pre-activation variable (layer 1..L).
inline Interval exactRange( const Network &net, const InputDomain &domain, unsigned layer, unsigned index,
                            const BoundsState *bounds = nullptr, const LpSolver &solver = defaultLpSolver() )
{
    BoundsState b = bounds ? *bounds : deepPoly( net, domain, nullptr, nullptr, solver ).bounds;
    std::vector<Fixing> unfixed = detail::unfixedNeurons( net, b, layer );
    Interval out{ Vector::Constant( 1, kInfinity ), Vector::Constant( 1, -kInfinity ) };
    for ( double sign : { 1.0, -1.0 } )
    {
        // Truncated network whose single output is sign * x(layer, index).
        std::vector<Layer> layers( net.layers().begin(), net.layers().begin() + layer );
        Layer head;
        head.weights = sign * net.layer( layer ).weights.row( index );
        head.bias = Vector::Constant( 1, sign * net.layer( layer ).bias[index] );
        head.activation = Activation::identity();
        layers.back() = head;
        Network sub( std::move( layers ) );

        BoundsState sb = emptyBounds( sub );
        for ( unsigned i = 0; i < layer; ++i )
        {
            sb.pre[i] = b.pre[i];
            sb.post[i] = b.post[i];
        }
        double lo = b.pre[layer].lower[index];
        double hi = b.pre[layer].upper[index];
        sb.pre[layer] = { Vector::Constant( 1, sign > 0 ? lo : -hi ), Vector::Constant( 1, sign > 0 ? hi : -lo ) };
        sb.post[layer] = sb.pre[layer];

        detail::PatternSearch search( sub, domain, sb, unfixed, solver );
        double best = -kInfinity;
        search.search( VarRef{ VarKind::Pre, layer, 0 }, {}, best, [&]( double value, const Vector & ) {
            best = std::max( best, value );
            return false;
        } );
        if ( sign > 0 )
            out.upper[0] = best;
        else
            out.lower[0] = -best;
    }
    return out;
}

// Exact pre-activation ranges of every neuron; post ranges are their images.
inline BoundsState exactBounds( const Network &net, const InputDomain &domain, const LpSolver &solver = defaultLpSolver() )
{
    BoundsState dp = deepPoly( net, domain, nullptr, nullptr, solver ).bounds;
    BoundsState b = dp;
    for ( unsigned i = 1; i <= net.numLayers(); ++i )
    {
        for ( unsigned j = 0; j < net.width( i ); ++j )
        {
            Interval r = exactRange( net, domain, i, j, &dp, solver );
            b.pre[i].lower[j] = r.lower[0];
            b.pre[i].upper[j] = r.upper[0];
        }
        b.post[i] = b.pre[i];
        if ( i < net.numLayers() )
            for ( unsigned j = 0; j < net.width( i ); ++j )
            {
                auto [lo, hi] = activationImage( net.layer( i ).activation, b.pre[i].lower[j], b.pre[i].upper[j] );
                b.post[i].lower[j] = lo;
                b.post[i].upper[j] = hi;
            }
    }
    return b;
}

// True if some input in the domain puts every listed neuron in its phase.
inline bool patternFeasible( const Network &net, const InputDomain &domain, const std::vector<Fixing> &fixings,
                             const LpSolver &solver = defaultLpSolver() )
{
    BoundsState b = deepPoly( net, domain, nullptr, nullptr, solver ).bounds;
    unsigned top = 0;
    for ( const Fixing &f : fixings )
        top = std::max( top, f.layer );
    std::vector<Fixing> free;
    for ( const Fixing &f : detail::unfixedNeurons( net, b, top ) )
        if ( std::find_if( fixings.begin(), fixings.end(), [&]( const Fixing &g ) {
                 return g.layer == f.layer && g.index == f.index;
             } ) == fixings.end() )
            free.push_back( f );
    detail::PatternSearch search( net, domain, b, free, solver );
    bool found = false;
    double best = -kInfinity;
    search.search( std::nullopt, fixings, best, [&]( double, const Vector & ) {
        found = true;
        return true;
    } );
    return found;
}

inline bool branchFeasible( const Network &net, const InputDomain &domain, const BranchCombination &branch,
                            const LpSolver &solver = defaultLpSolver() )
{
    std::vector<Fixing> fixings;
    for ( size_t k = 0; k < branch.neurons.size(); ++k )
        fixings.push_back( { branch.layer, branch.neurons[k], branch.phases[k] } );
    return patternFeasible( net, domain, fixings, solver );
}

enum class SplitHeuristic
{
    Nsse,
    Width,
};

struct BabConfig
{
    TightenMethod method = TightenMethod::Pmnr;
    PmnrConfig pmnr;
    SplitHeuristic split = SplitHeuristic::Nsse;
    unsigned maxDepth = 64;
    double timeout = 60.0;
    unsigned threads = 1;
    unsigned maxSubproblems = 0; // 0 = unlimited
    unsigned samples = 64;
    std::uint64_t seed = 0;
};

namespace detail {

struct Subproblem
{
    BoundsState prior;
    std::vector<Fixing> fixings;
    unsigned depth = 0;
    std::uint64_t id = 0;
};

inline std::vector<Vector> candidatePoints( const Interval &box, unsigned random, std::uint64_t seed )
{
    std::vector<Vector> pts;
    Vector center = 0.5 * ( box.lower + box.upper );
    pts.push_back( center );
    for ( Eigen::Index j = 0; j < center.size(); ++j )
    {
        Vector a = center;
        Vector b = center;
        a[j] = box.lower[j];
        b[j] = box.upper[j];
        pts.push_back( a );
        pts.push_back( b );
    }
    std::mt19937_64 rng( seed );
    for ( unsigned k = 0; k < random; ++k )
    {
        Vector x( center.size() );
        for ( Eigen::Index j = 0; j < x.size(); ++j )
            x[j] = std::uniform_real_distribution<double>( box.lower[j], box.upper[j] )( rng );
        pts.push_back( x );
    }
    return pts;
}

} // namespace detail

/*
  Branch and bound on phase splits of a canonical network. The root is
  tightened with the configured method, later subproblems with DeepPoly
  under the inherited bounds and phase fixings.
*/
inline Verdict babVerify( const Network &canonical, const InputDomain &domain, const BabConfig &cfg = {},
                          const LpSolver &solver = defaultLpSolver() )
{
    auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>( std::chrono::steady_clock::now() - start ).count(); };

    std::mutex mutex;
    std::condition_variable cv;
    std::deque<detail::Subproblem> queue;
    unsigned active = 0;
    bool done = false;
    Verdict verdict;
    verdict.status = VerdictStatus::Unsat;
    std::uint64_t nextId = 1;

    detail::Subproblem root;
    root.prior = emptyBounds( canonical );
    queue.push_back( root );

    auto finish = [&]( VerdictStatus status, const std::string &reason, const Vector &witness ) {
        // Caller holds the lock.
        if ( verdict.status == VerdictStatus::Sat )
            return;
        if ( status == VerdictStatus::Sat )
        {
            verdict.status = status;
            verdict.witness = witness;
            verdict.reason.clear();
            done = true;
        }
        else if ( status == VerdictStatus::Unknown && verdict.status == VerdictStatus::Unsat )
        {
            verdict.status = status;
            verdict.reason = reason;
        }
    };

    auto process = [&]( const detail::Subproblem &sub, std::vector<detail::Subproblem> &children ) -> std::tuple<VerdictStatus, std::string, Vector> {
        BoundsState bounds;
        SingleRelax relax;
        if ( sub.id == 0 )
        {
            PmnrResult r = tighten( canonical, domain, true, cfg.method, cfg.pmnr, solver );
            bounds = r.bounds;
            if ( !bounds.contradiction )
            {
                DeepPolyResult dp = deepPoly( canonical, domain, nullptr, &bounds, solver );
                detail::applyOutputConstraint( dp.bounds );
                bounds = dp.bounds;
                relax = dp.relax;
            }
        }
        else
        {
            BoundsState prior = sub.prior;
            bool empty = false;
            for ( const Fixing &f : sub.fixings )
                if ( !detail::restrictToPhase( prior, f ) )
                    empty = true;
            if ( empty )
                return { VerdictStatus::Unsat, "", Vector() };
            DeepPolyResult dp = deepPoly( canonical, domain, nullptr, &prior, solver );
            detail::applyOutputConstraint( dp.bounds );
            bounds = dp.bounds;
            relax = dp.relax;
        }
        {
            std::lock_guard<std::mutex> lock( mutex );
            ++verdict.stats.tightenCalls;
        }
        if ( bounds.contradiction || bounds.output().upper[0] <= 0.0 )
            return { VerdictStatus::Unsat, "", Vector() };

        for ( const Vector &x : detail::candidatePoints( bounds.post[0], cfg.samples, cfg.seed + sub.id ) )
            if ( isWitness( canonical, domain, x ) )
                return { VerdictStatus::Sat, "", x };

        std::vector<Fixing> unfixed = detail::unfixedNeurons( canonical, bounds );
        if ( unfixed.empty() )
        {
            // Every phase is decided: the relaxed program is exact.
            detail::requireExactDomain( domain );
            LpEncoding enc = encodeRelaxed( canonical, bounds, { &relax }, {}, domain );
            enc.lp.objective.setZero();
            enc.lp.objective[enc.index( { VarKind::Pre, canonical.numLayers(), 0 } )] = 1.0;
            enc.lp.sense = Sense::Maximize;
            LpOutcome out = solver( enc.lp );
            if ( out.status == LpStatus::Infeasible || ( out.status == LpStatus::Optimal && out.value <= 0.0 ) )
                return { VerdictStatus::Unsat, "", Vector() };
            if ( out.status == LpStatus::Optimal )
            {
                Vector x = detail::projectIntoDomain( domain, out.point.segment( enc.postOffset[0], canonical.inputSize() ) );
                if ( isWitness( canonical, domain, x ) )
                    return { VerdictStatus::Sat, "", x };
                if ( out.value <= 1e-9 )
                    return { VerdictStatus::Unsat, "", Vector() };
            }
            return { VerdictStatus::Unknown, "leaf optimum within solver tolerance", Vector() };
        }
        if ( sub.depth >= cfg.maxDepth )
            return { VerdictStatus::Unknown, "maximum depth reached", Vector() };

        Fixing pick = unfixed.front();
        double best = -kInfinity;
        if ( cfg.split == SplitHeuristic::Nsse )
        {
            for ( const NeuronScore &s : nsseScores( canonical, bounds, relax ) )
                if ( s.score > best )
                {
                    best = s.score;
                    pick = { s.layer, s.index, 0 };
                }
        }
        else
            for ( const Fixing &f : unfixed )
            {
                double w = bounds.pre[f.layer].upper[f.index] - bounds.pre[f.layer].lower[f.index];
                if ( w > best )
                {
                    best = w;
                    pick = f;
                }
            }
        unsigned count = static_cast<unsigned>(
            phases( canonical.layer( pick.layer ).activation, bounds.pre[pick.layer].lower[pick.index],
                    bounds.pre[pick.layer].upper[pick.index] )
                .size() );
        for ( unsigned p = 0; p < count; ++p )
        {
            detail::Subproblem child;
            child.prior = bounds;
            child.fixings = sub.fixings;
            child.fixings.push_back( { pick.layer, pick.index, p } );
            child.depth = sub.depth + 1;
            children.push_back( std::move( child ) );
        }
        return { VerdictStatus::Unsat, "split", Vector() };
    };

    auto worker = [&] {
        std::unique_lock<std::mutex> lock( mutex );
        while ( true )
        {
            cv.wait( lock, [&] { return done || !queue.empty() || active == 0; } );
            if ( done || ( queue.empty() && active == 0 ) )
            {
                done = true;
                cv.notify_all();
                return;
            }
            if ( elapsed() > cfg.timeout )
            {
                finish( VerdictStatus::Unknown, "timeout", Vector() );
                done = true;
                cv.notify_all();
                return;
            }
            if ( cfg.maxSubproblems && verdict.stats.subproblems >= cfg.maxSubproblems )
            {
                finish( VerdictStatus::Unknown, "subproblem budget exhausted", Vector() );
                done = true;
                cv.notify_all();
                return;
            }
            detail::Subproblem sub = std::move( queue.back() );
            queue.pop_back();
            ++active;
            ++verdict.stats.subproblems;
            lock.unlock();

            std::vector<detail::Subproblem> children;
            VerdictStatus status = VerdictStatus::Unknown;
            std::string reason;
            Vector witness;
            try
            {
                std::tie( status, reason, witness ) = process( sub, children );
            }
            catch ( const std::exception &e )
            {
                status = VerdictStatus::Unknown;
                reason = e.what();
            }

            lock.lock();
            --active;
            finish( status, reason, witness );
            // Push in reverse so the first phase is explored first.
            for ( auto it = children.rbegin(); it != children.rend(); ++it )
            {
                it->id = nextId++;
                queue.push_back( std::move( *it ) );
            }
            cv.notify_all();
        }
    };

    unsigned threads = std::max( 1u, cfg.threads );
    if ( threads == 1 )
        worker();
    else
    {
        std::vector<std::thread> pool;
        for ( unsigned t = 0; t < threads; ++t )
            pool.emplace_back( worker );
        for ( std::thread &t : pool )
            t.join();
    }
    verdict.stats.wallTime = elapsed();
    if ( verdict.status == VerdictStatus::Sat && !isWitness( canonical, domain, verdict.witness ) )
    {
        verdict.status = VerdictStatus::Unknown;
        verdict.reason = "witness failed re-validation";
    }
    return verdict;
}

inline Verdict babVerify( const Query &query, const BabConfig &cfg = {} )
{
    query.validate();
    return babVerify( query.canonicalNetwork(), query.input, cfg );
}

struct SoundnessReport
{
    unsigned samples = 0;
    unsigned boundViolations = 0;
    unsigned planeViolations = 0;
    double maxViolation = 0.0;
    double tolerance = 1e-7;

    bool ok() const
    {
        return boundViolations == 0 && planeViolations == 0;
    }
};

// Uniform in boxes; balls are sampled in their box and pulled onto the ball;
// polyhedra by rejection from the bounding box.
inline Vector sampleDomain( const InputDomain &domain, std::mt19937_64 &rng, const LpSolver &solver = defaultLpSolver() )
{
    Interval box = domainBox( domain, solver );
    auto uniform = [&] {
        Vector x( box.size() );
        for ( Eigen::Index j = 0; j < x.size(); ++j )
            x[j] = std::uniform_real_distribution<double>( box.lower[j], box.upper[j] )( rng );
        return x;
    };
    if ( std::holds_alternative<Box>( domain ) )
        return uniform();
    if ( const LpBall *ball = std::get_if<LpBall>( &domain ) )
    {
        Vector x = uniform();
        double n = norm( x - ball->center, ball->p );
        if ( n > ball->radius )
            x = ball->center + ( x - ball->center ) * ( ball->radius / n );
        return x;
    }
    for ( int attempt = 0; attempt < 10000; ++attempt )
    {
        Vector x = uniform();
        if ( domainContains( domain, x, 0.0 ) )
            return x;
    }
    throw PreconditionError( "could not sample the input polyhedron" );
}

inline SoundnessReport sampleSoundness( const Network &net, const InputDomain &domain, const BoundsState *bounds,
                                        const std::vector<HyperPlane> &planes, unsigned samples, std::uint64_t seed,
                                        double tolerance = 1e-7 )
{
    if ( samples < 1 )
        throw PreconditionError( "at least one sample is required" );
    SoundnessReport report;
    report.tolerance = tolerance;
    std::mt19937_64 rng( seed );
    bool checkBounds = bounds && !bounds->contradiction;
    for ( unsigned s = 0; s < samples; ++s )
    {
        Trace t = forward( net, sampleDomain( domain, rng ) );
        ++report.samples;
        if ( checkBounds )
            for ( unsigned i = 0; i <= net.numLayers(); ++i )
                for ( unsigned j = 0; j < net.width( i ); ++j )
                    for ( const auto &[value, box] :
                          { std::pair{ t.pre[i][j], &bounds->pre[i] }, std::pair{ t.post[i][j], &bounds->post[i] } } )
                    {
                        double v = std::max( box->lower[j] - value, value - box->upper[j] );
                        report.maxViolation = std::max( report.maxViolation, v );
                        if ( v > tolerance )
                            ++report.boundViolations;
                    }
        for ( const HyperPlane &p : planes )
        {
            double v = p.evaluate( t.pre, t.post ) - p.bias;
            report.maxViolation = std::max( report.maxViolation, v );
            if ( v > tolerance )
                ++report.planeViolations;
        }
    }
    return report;
}

} // namespace pmnr
