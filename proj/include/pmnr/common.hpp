#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pmnr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Error raised when an input document does not match its schema. The path
// names the offending JSON location, e.g. "layers[1].weights".
class ParseError : public std::runtime_error
{
public:
    ParseError( const std::string &path, const std::string &message )
        : std::runtime_error( path + ": " + message )
        , _path( path )
    {
    }

    const std::string &path() const
    {
        return _path;
    }

private:
    std::string _path;
};

class DimensionError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

class PreconditionError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Elementwise positive part max(v, 0).
inline Vector positivePart( const Vector &v )
{
    return v.cwiseMax( 0.0 );
}

// Elementwise negative part max(-v, 0); note v = pos(v) - neg(v).
inline Vector negativePart( const Vector &v )
{
    return ( -v ).cwiseMax( 0.0 );
}

inline Matrix positivePart( const Matrix &m )
{
    return m.cwiseMax( 0.0 );
}

inline Matrix negativePart( const Matrix &m )
{
    return ( -m ).cwiseMax( 0.0 );
}

inline bool allFinite( const Vector &v )
{
    return v.allFinite();
}

} // namespace pmnr
