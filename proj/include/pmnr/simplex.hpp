#pragma once

#include "pmnr/common.hpp"

#include <functional>
#include <vector>

namespace pmnr {

enum class Relation
{
    LessEqual,
    Equal,
    GreaterEqual,
};

struct LinearConstraint
{
    Vector coeffs;
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
};

enum class Sense
{
    Minimize,
    Maximize,
};

struct LinearProgram
{
    Sense sense = Sense::Minimize;
    Vector objective;
    std::vector<LinearConstraint> constraints;
    // -kInfinity / kInfinity for absent bounds.
    Vector lower;
    Vector upper;

    explicit LinearProgram( unsigned numVariables = 0 )
        : objective( Vector::Zero( numVariables ) )
        , lower( Vector::Constant( numVariables, -kInfinity ) )
        , upper( Vector::Constant( numVariables, kInfinity ) )
    {
    }

    unsigned numVariables() const
    {
        return static_cast<unsigned>( objective.size() );
    }

    void addConstraint( Vector coeffs, Relation relation, double rhs )
    {
        constraints.push_back( { std::move( coeffs ), relation, rhs } );
    }

    void validate() const
    {
        Eigen::Index n = objective.size();
        if ( lower.size() != n || upper.size() != n )
            throw DimensionError( "variable bound vectors do not match objective length" );
        for ( size_t k = 0; k < constraints.size(); ++k )
        {
            if ( constraints[k].coeffs.size() != n )
                throw DimensionError( "constraint " + std::to_string( k ) + " has " +
                                      std::to_string( constraints[k].coeffs.size() ) +
                                      " coefficients, expected " + std::to_string( n ) );
            if ( !constraints[k].coeffs.allFinite() || !std::isfinite( constraints[k].rhs ) )
                throw DimensionError( "constraint " + std::to_string( k ) + " is not finite" );
        }
        if ( !objective.allFinite() )
            throw DimensionError( "objective is not finite" );
    }
};

enum class LpStatus
{
    Optimal,
    Infeasible,
    Unbounded,
};

struct LpOutcome
{
    LpStatus status = LpStatus::Infeasible;
    double value = 0.0;
    Vector point;
    unsigned iterations = 0;
};

class LpStalled : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

using LpSolver = std::function<LpOutcome( const LinearProgram & )>;

struct SimplexOptions
{
    double pivotTolerance = 1e-9;
    double feasibilityTolerance = 1e-7;
    unsigned maxIterations = 100000;
};

namespace detail {

using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/*
  Dense tableau in canonical form. Rows 0..m-1 are constraints, row m holds
  reduced costs with the negated objective value in the last column.
*/
class TableauSimplex
{
public:
    TableauSimplex( Tableau tableau, std::vector<int> basis, const SimplexOptions &options )
        : _t( std::move( tableau ) )
        , _basis( std::move( basis ) )
        , _options( options )
    {
    }

    int rows() const
    {
        return static_cast<int>( _t.rows() ) - 1;
    }

    int rhsColumn() const
    {
        return static_cast<int>( _t.cols() ) - 1;
    }

    // Installs reduced costs for cost vector c (length = number of columns).
    void setCost( const Vector &c )
    {
        int m = rows();
        int rhs = rhsColumn();
        _t.row( m ).setZero();
        _t.row( m ).head( rhs ) = c.transpose();
        for ( int i = 0; i < m; ++i )
        {
            double cb = c[_basis[i]];
            if ( cb != 0.0 )
                _t.row( m ) -= cb * _t.row( i );
        }
    }

    double objectiveValue() const
    {
        return -_t( rows(), rhsColumn() );
    }

    // Runs Bland's rule; columns with allowed[j] == false never enter.
    // Returns false if unbounded.
    bool optimize( const std::vector<bool> &allowed, unsigned &iterations )
    {
        int m = rows();
        int rhs = rhsColumn();
        while ( true )
        {
            int enter = -1;
            for ( int j = 0; j < rhs; ++j )
                if ( allowed[j] && _t( m, j ) < -_options.pivotTolerance )
                {
                    enter = j;
                    break;
                }
            if ( enter < 0 )
                return true;

            int leave = -1;
            double best = kInfinity;
            for ( int i = 0; i < m; ++i )
            {
                double a = _t( i, enter );
                if ( a > _options.pivotTolerance )
                {
                    double ratio = std::max( _t( i, rhs ), 0.0 ) / a;
                    if ( leave < 0 || ratio < best - 1e-12 )
                    {
                        best = ratio;
                        leave = i;
                    }
                    else if ( ratio <= best + 1e-12 && _basis[i] < _basis[leave] )
                        leave = i;
                }
            }
            if ( leave < 0 )
                return false;

            if ( ++iterations > _options.maxIterations )
                throw LpStalled( "simplex exceeded " + std::to_string( _options.maxIterations ) +
                                 " iterations" );
            pivot( leave, enter );
        }
    }

    void pivot( int row, int col )
    {
        _t.row( row ) /= _t( row, col );
        for ( int i = 0; i < static_cast<int>( _t.rows() ); ++i )
        {
            if ( i == row )
                continue;
            double factor = _t( i, col );
            if ( factor != 0.0 )
            {
                _t.row( i ) -= factor * _t.row( row );
                _t( i, col ) = 0.0;
            }
        }
        _basis[row] = col;
    }

    // Pivots basic columns in `banned` out of the basis where possible.
    void evictBasic( const std::vector<bool> &banned )
    {
        int m = rows();
        int rhs = rhsColumn();
        for ( int i = 0; i < m; ++i )
        {
            if ( !banned[_basis[i]] )
                continue;
            int best = -1;
            double bestAbs = _options.pivotTolerance;
            for ( int j = 0; j < rhs; ++j )
                if ( !banned[j] && std::fabs( _t( i, j ) ) > bestAbs )
                {
                    bestAbs = std::fabs( _t( i, j ) );
                    best = j;
                }
            if ( best >= 0 )
                pivot( i, best );
        }
    }

    Vector basicSolution( int numColumns ) const
    {
        Vector y = Vector::Zero( numColumns );
        for ( int i = 0; i < rows(); ++i )
            if ( _basis[i] < numColumns )
                y[_basis[i]] = _t( i, rhsColumn() );
        return y;
    }

private:
    Tableau _t;
    std::vector<int> _basis;
    SimplexOptions _options;
};

} // namespace detail

/*
  Two-phase dense simplex. Variables are mapped to nonnegative columns:
  x = l + y when l is finite, x = u - y when only u is finite, and
  x = y+ - y- when free. Finite two-sided bounds add a row y <= u - l.
*/
inline LpOutcome simplexSolve( const LinearProgram &lp, const SimplexOptions &options = {} )
{
    lp.validate();
    const int n = static_cast<int>( lp.numVariables() );

    for ( int j = 0; j < n; ++j )
        if ( lp.lower[j] > lp.upper[j] )
            return LpOutcome{ LpStatus::Infeasible, 0.0, Vector(), 0 };

    enum class Map
    {
        Shift,
        Flip,
        Split
    };
    std::vector<Map> map( n );
    std::vector<int> column( n );
    int ny = 0;
    for ( int j = 0; j < n; ++j )
    {
        column[j] = ny;
        if ( std::isfinite( lp.lower[j] ) )
        {
            map[j] = Map::Shift;
            ny += 1;
        }
        else if ( std::isfinite( lp.upper[j] ) )
        {
            map[j] = Map::Flip;
            ny += 1;
        }
        else
        {
            map[j] = Map::Split;
            ny += 2;
        }
    }

    // Rows over y: coeffs, relation, rhs.
    struct Row
    {
        Vector a;
        Relation rel;
        double b;
    };
    std::vector<Row> rows;
    auto transform = [&]( const Vector &coeffs, double rhs, Vector &out, double &outRhs ) {
        out = Vector::Zero( ny );
        outRhs = rhs;
        for ( int j = 0; j < n; ++j )
        {
            double a = coeffs[j];
            if ( a == 0.0 )
                continue;
            switch ( map[j] )
            {
            case Map::Shift:
                out[column[j]] += a;
                outRhs -= a * lp.lower[j];
                break;
            case Map::Flip:
                out[column[j]] -= a;
                outRhs -= a * lp.upper[j];
                break;
            case Map::Split:
                out[column[j]] += a;
                out[column[j] + 1] -= a;
                break;
            }
        }
    };
    for ( const LinearConstraint &c : lp.constraints )
    {
        Row row;
        transform( c.coeffs, c.rhs, row.a, row.b );
        row.rel = c.relation;
        rows.push_back( std::move( row ) );
    }
    for ( int j = 0; j < n; ++j )
        if ( map[j] == Map::Shift && std::isfinite( lp.upper[j] ) )
        {
            Row row{ Vector::Zero( ny ), Relation::LessEqual, lp.upper[j] - lp.lower[j] };
            row.a[column[j]] = 1.0;
            rows.push_back( std::move( row ) );
        }

    double sign = lp.sense == Sense::Minimize ? 1.0 : -1.0;
    Vector costY;
    double unusedOffset = 0.0;
    transform( sign * lp.objective, 0.0, costY, unusedOffset );

    const int m = static_cast<int>( rows.size() );
    int numSlack = 0;
    for ( const Row &row : rows )
        if ( row.rel != Relation::Equal )
            ++numSlack;

    // Normalize rhs >= 0 and decide which rows need an artificial.
    std::vector<int> slackCol( m, -1 );
    std::vector<double> slackSign( m, 0.0 );
    {
        int s = ny;
        for ( int i = 0; i < m; ++i )
            if ( rows[i].rel != Relation::Equal )
            {
                slackCol[i] = s++;
                slackSign[i] = rows[i].rel == Relation::LessEqual ? 1.0 : -1.0;
            }
    }
    std::vector<bool> needsArtificial( m, false );
    int numArt = 0;
    for ( int i = 0; i < m; ++i )
    {
        if ( rows[i].b < 0 )
        {
            rows[i].a = -rows[i].a;
            rows[i].b = -rows[i].b;
            slackSign[i] = -slackSign[i];
        }
        if ( !( slackCol[i] >= 0 && slackSign[i] > 0 ) )
        {
            needsArtificial[i] = true;
            ++numArt;
        }
    }

    const int numColumns = ny + numSlack + numArt;
    detail::Tableau t = detail::Tableau::Zero( m + 1, numColumns + 1 );
    std::vector<int> basis( m );
    std::vector<bool> isArtificial( numColumns, false );
    int art = ny + numSlack;
    for ( int i = 0; i < m; ++i )
    {
        t.row( i ).head( ny ) = rows[i].a.transpose();
        if ( slackCol[i] >= 0 )
            t( i, slackCol[i] ) = slackSign[i];
        t( i, numColumns ) = rows[i].b;
        if ( needsArtificial[i] )
        {
            t( i, art ) = 1.0;
            isArtificial[art] = true;
            basis[i] = art++;
        }
        else
            basis[i] = slackCol[i];
    }

    detail::TableauSimplex simplex( std::move( t ), basis, options );
    unsigned iterations = 0;
    std::vector<bool> allowed( numColumns, true );

    if ( numArt > 0 )
    {
        Vector phase1 = Vector::Zero( numColumns );
        for ( int j = 0; j < numColumns; ++j )
            if ( isArtificial[j] )
                phase1[j] = 1.0;
        simplex.setCost( phase1 );
        simplex.optimize( allowed, iterations );
        double scale = 1.0;
        for ( const Row &row : rows )
            scale = std::max( scale, std::fabs( row.b ) );
        if ( simplex.objectiveValue() > options.feasibilityTolerance * scale )
            return LpOutcome{ LpStatus::Infeasible, 0.0, Vector(), iterations };
        simplex.evictBasic( isArtificial );
        for ( int j = 0; j < numColumns; ++j )
            if ( isArtificial[j] )
                allowed[j] = false;
    }

    Vector phase2 = Vector::Zero( numColumns );
    phase2.head( ny ) = costY;
    simplex.setCost( phase2 );
    if ( !simplex.optimize( allowed, iterations ) )
        return LpOutcome{ LpStatus::Unbounded, sign * -kInfinity, Vector(), iterations };

    Vector y = simplex.basicSolution( numColumns );
    Vector x( n );
    for ( int j = 0; j < n; ++j )
    {
        switch ( map[j] )
        {
        case Map::Shift:
            x[j] = lp.lower[j] + y[column[j]];
            break;
        case Map::Flip:
            x[j] = lp.upper[j] - y[column[j]];
            break;
        case Map::Split:
            x[j] = y[column[j]] - y[column[j] + 1];
            break;
        }
    }
    LpOutcome outcome;
    outcome.status = LpStatus::Optimal;
    outcome.point = x;
    outcome.value = lp.objective.dot( x );
    outcome.iterations = iterations;
    return outcome;
}

inline LpSolver defaultLpSolver()
{
    return []( const LinearProgram &lp ) { return simplexSolve( lp ); };
}

// Largest violation of any constraint or bound at point x.
inline double maxViolation( const LinearProgram &lp, const Vector &x )
{
    double worst = 0.0;
    for ( const LinearConstraint &c : lp.constraints )
    {
        double lhs = c.coeffs.dot( x );
        switch ( c.relation )
        {
        case Relation::LessEqual:
            worst = std::max( worst, lhs - c.rhs );
            break;
        case Relation::GreaterEqual:
            worst = std::max( worst, c.rhs - lhs );
            break;
        case Relation::Equal:
            worst = std::max( worst, std::fabs( lhs - c.rhs ) );
            break;
        }
    }
    for ( Eigen::Index j = 0; j < x.size(); ++j )
    {
        worst = std::max( worst, lp.lower[j] - x[j] );
        worst = std::max( worst, x[j] - lp.upper[j] );
    }
    return worst;
}

} // namespace pmnr
