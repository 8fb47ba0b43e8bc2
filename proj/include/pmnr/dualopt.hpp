#pragma once

#include "pmnr/linear_form.hpp"
#include "pmnr/sbt.hpp"

#include <vector>

namespace pmnr {

// Rows "form <= 0".
struct ConstraintPolyhedron
{
    std::vector<LayeredForm> rows;
};

struct PgdConfig
{
    unsigned iterations = 200;
    double step = 0.1;
    double decay = 0.98;
    bool optimizeAlpha = true;

    void validate() const
    {
        if ( iterations < 1 )
            throw PreconditionError( "PGD needs at least one iteration" );
        if ( !( step > 0 ) )
            throw PreconditionError( "PGD step must be positive" );
    }
};

struct DualState
{
    Vector gamma;
    AlphaSet alpha;
    std::vector<Vector> nu;    // nu[i], i in 1..L
    std::vector<Vector> nuHat; // nuHat[i], i in 1..L-1
    double value = -kInfinity;
};

struct DualGradient
{
    Vector gamma;
    AlphaSet alpha;
};

/*
  Lagrangian dual of
      min  obj(h, x)
      s.t. x(i) = W(i) h(i-1) + b(i),  relaxation lines,  rows <= 0,  h(0) in D.
  For any gamma >= 0 and admissible alpha, value() is a lower bound on the
  minimum. Alpha parameterizes the lower line slope of neurons marked free.
*/
class DualProblem
{
public:
    DualProblem( const Network &net, const SingleRelax &relax, const BoundsState &bounds,
                 const InputDomain &domain, const ConstraintPolyhedron &poly, const LayeredForm &objective,
                 const LpSolver &solver = defaultLpSolver() )
        : _net( net )
        , _relax( relax )
        , _domain( domain )
        , _objective( objective )
        , _solver( solver )
    {
        unsigned L = net.numLayers();
        unsigned m = static_cast<unsigned>( poly.rows.size() );
        _chat.resize( L + 1 );
        _cpre.resize( L + 1 );
        _d = Vector( m );
        for ( unsigned i = 0; i <= L; ++i )
        {
            _chat[i] = Matrix::Zero( m, i < L ? net.width( i ) : 0 );
            _cpre[i] = Matrix::Zero( m, i > 0 ? net.width( i ) : 0 );
        }
        for ( unsigned r = 0; r < m; ++r )
        {
            const LayeredForm &row = poly.rows[r];
            checkShape( row );
            for ( unsigned i = 0; i < L; ++i )
                _chat[i].row( r ) = row.hat[i].transpose();
            for ( unsigned i = 1; i <= L; ++i )
                _cpre[i].row( r ) = row.pre[i].transpose();
            _d[r] = row.constant;
        }
        checkShape( objective );

        _free.resize( L + 1 );
        for ( unsigned i = 1; i < L; ++i )
        {
            _free[i].assign( net.width( i ), false );
            for ( unsigned j = 0; j < net.width( i ); ++j )
                _free[i][j] = isUnfixed( net.layer( i ).activation, bounds.pre[i].lower[j],
                                         bounds.pre[i].upper[j] );
        }
    }

    // Neurons whose lower slope is not a free parameter (e.g. phase-fixed by a branch).
    void freezeAlpha( unsigned layer, unsigned index )
    {
        _free[layer][index] = false;
    }

    bool isFree( unsigned layer, unsigned index ) const
    {
        return _free[layer][index];
    }

    unsigned numRows() const
    {
        return static_cast<unsigned>( _d.size() );
    }

    // Alpha currently encoded in the relaxation.
    AlphaSet currentAlpha() const
    {
        AlphaSet alpha( _net.numLayers() + 1 );
        for ( unsigned i = 1; i < _net.numLayers(); ++i )
            alpha[i] = _relax.layers[i].lowerSlope;
        return alpha;
    }

    DualState evaluate( const Vector &gamma, const AlphaSet &alpha, DualGradient *gradient = nullptr ) const
    {
        unsigned L = _net.numLayers();
        if ( gamma.size() != _d.size() )
            throw DimensionError( "gamma has the wrong length" );
        if ( gamma.size() && gamma.minCoeff() < 0.0 )
            throw PreconditionError( "gamma must be nonnegative" );

        // Lower slopes with free alphas applied.
        std::vector<Vector> sl( L + 1 );
        for ( unsigned i = 1; i < L; ++i )
        {
            sl[i] = _relax.layers[i].lowerSlope;
            const Activation &act = _net.layer( i ).activation;
            for ( unsigned j = 0; j < _net.width( i ); ++j )
                if ( _free[i][j] )
                {
                    auto [lo, hi] = alphaRange( act );
                    double a = alpha[i][j];
                    if ( a < lo - 1e-12 || a > hi + 1e-12 )
                        throw PreconditionError( "alpha outside its admissible range" );
                    sl[i][j] = std::clamp( a, lo, hi );
                }
        }

        DualState state;
        state.gamma = gamma;
        state.alpha = alpha;
        state.nu.resize( L + 1 );
        state.nuHat.resize( L + 1 );
        state.nu[L] = -_objective.pre[L] - _cpre[L].transpose() * gamma;
        for ( unsigned i = L - 1; i >= 1; --i )
        {
            const LayerRelax &r = _relax.layers[i];
            Vector nh = _net.layer( i + 1 ).weights.transpose() * state.nu[i + 1] -
                        _chat[i].transpose() * gamma - _objective.hat[i];
            state.nuHat[i] = nh;
            Vector pos = nh.cwiseMax( 0.0 );
            Vector neg = ( -nh ).cwiseMax( 0.0 );
            state.nu[i] = r.upperSlope.cwiseProduct( pos ) - sl[i].cwiseProduct( neg ) -
                          _cpre[i].transpose() * gamma - _objective.pre[i];
        }
        Vector q = _objective.hat[0] - _net.layer( 1 ).weights.transpose() * state.nu[1] +
                   _chat[0].transpose() * gamma;

        double g = infimumOverDomain( q, _domain, _solver );
        for ( unsigned i = 1; i <= L; ++i )
            g -= state.nu[i].dot( _net.layer( i ).bias );
        for ( unsigned i = 1; i < L; ++i )
        {
            const LayerRelax &r = _relax.layers[i];
            Vector pos = state.nuHat[i].cwiseMax( 0.0 );
            Vector neg = ( -state.nuHat[i] ).cwiseMax( 0.0 );
            g -= pos.dot( r.upperOffset ) - neg.dot( r.lowerOffset );
        }
        g += gamma.dot( _d ) + _objective.constant;
        state.value = g;

        if ( gradient )
        {
            Vector xs = argminOverDomain( q, _domain, _solver );
            gradient->gamma = _chat[0] * xs + _d;
            gradient->alpha.assign( L + 1, Vector() );
            // Adjoint of nu(1), then walk upwards.
            Vector adjNu = -_net.layer( 1 ).weights * xs - _net.layer( 1 ).bias;
            for ( unsigned i = 1; i <= L; ++i )
            {
                gradient->gamma -= _cpre[i] * adjNu;
                if ( i == L )
                    break;
                const LayerRelax &r = _relax.layers[i];
                const Vector &nh = state.nuHat[i];
                Vector adjHat( nh.size() );
                gradient->alpha[i] = Vector::Zero( nh.size() );
                for ( Eigen::Index j = 0; j < nh.size(); ++j )
                {
                    if ( nh[j] > 0 )
                        adjHat[j] = adjNu[j] * r.upperSlope[j] - r.upperOffset[j];
                    else if ( nh[j] < 0 )
                    {
                        adjHat[j] = adjNu[j] * sl[i][j] - r.lowerOffset[j];
                        if ( _free[i][j] )
                            gradient->alpha[i][j] = adjNu[j] * nh[j];
                    }
                    else
                        adjHat[j] = 0.0;
                }
                gradient->gamma -= _chat[i] * adjHat;
                adjNu = _net.layer( i + 1 ).weights * adjHat - _net.layer( i + 1 ).bias;
            }
        }
        return state;
    }

    double value( const Vector &gamma, const AlphaSet &alpha ) const
    {
        return evaluate( gamma, alpha ).value;
    }

    // Projected gradient ascent on (gamma, alpha); returns the best iterate.
    DualState maximize( const PgdConfig &cfg, const AlphaSet *initialAlpha = nullptr ) const
    {
        cfg.validate();
        Vector gamma = Vector::Zero( _d.size() );
        AlphaSet alpha = initialAlpha ? *initialAlpha : currentAlpha();
        project( alpha );
        DualState best;
        double step = cfg.step;
        for ( unsigned it = 0; it < cfg.iterations; ++it )
        {
            DualGradient grad;
            DualState s = evaluate( gamma, alpha, &grad );
            if ( s.value > best.value )
                best = s;
            if ( it + 1 == cfg.iterations )
                break;
            if ( gamma.size() )
                gamma = ( gamma + step * grad.gamma ).cwiseMax( 0.0 );
            if ( cfg.optimizeAlpha )
            {
                for ( unsigned i = 1; i < _net.numLayers(); ++i )
                    alpha[i] += step * grad.alpha[i];
                project( alpha );
            }
            step *= cfg.decay;
        }
        return best;
    }

    void project( AlphaSet &alpha ) const
    {
        for ( unsigned i = 1; i < _net.numLayers(); ++i )
        {
            const Activation &act = _net.layer( i ).activation;
            for ( unsigned j = 0; j < _net.width( i ); ++j )
                alpha[i][j] = _free[i][j] ? clampAlpha( act, alpha[i][j] ) : _relax.layers[i].lowerSlope[j];
        }
    }

private:
    const Network &_net;
    SingleRelax _relax;
    InputDomain _domain;
    LayeredForm _objective;
    LpSolver _solver;
    std::vector<Matrix> _chat;
    std::vector<Matrix> _cpre;
    Vector _d;
    std::vector<std::vector<bool>> _free;

    void checkShape( const LayeredForm &f ) const
    {
        unsigned L = _net.numLayers();
        if ( f.hat.size() != L + 1 || f.pre.size() != L + 1 )
            throw DimensionError( "linear form does not match the network depth" );
        for ( unsigned i = 0; i < L; ++i )
            if ( f.hat[i].size() != _net.width( i ) )
                throw DimensionError( "linear form width mismatch at layer " + std::to_string( i ) );
        for ( unsigned i = 1; i <= L; ++i )
            if ( f.pre[i].size() != _net.width( i ) )
                throw DimensionError( "linear form width mismatch at layer " + std::to_string( i ) );
    }
};

inline DualState dualValue( const Network &net, const SingleRelax &relax, const BoundsState &bounds,
                            const InputDomain &domain, const ConstraintPolyhedron &poly,
                            const LayeredForm &objective, const Vector &gamma, const AlphaSet &alpha )
{
    return DualProblem( net, relax, bounds, domain, poly, objective ).evaluate( gamma, alpha );
}

inline DualState maximizeDual( const Network &net, const SingleRelax &relax, const BoundsState &bounds,
                               const InputDomain &domain, const ConstraintPolyhedron &poly,
                               const LayeredForm &objective, const PgdConfig &cfg )
{
    return DualProblem( net, relax, bounds, domain, poly, objective ).maximize( cfg );
}

} // namespace pmnr
