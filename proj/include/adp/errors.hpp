#pragma once

#include <stdexcept>
#include <string>

namespace adp {

// Base for everything thrown by this library. Conditions that are part of
// normal operation (no arrival before the horizon, zero-probability paths)
// are reported through return values instead, never as exceptions.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class NegativeTime : public Error {
 public:
  explicit NegativeTime(const std::string& what) : Error(what) {}
};

class ReversedInterval : public Error {
 public:
  explicit ReversedInterval(const std::string& what) : Error(what) {}
};

class QuadratureNonConvergence : public Error {
 public:
  explicit QuadratureNonConvergence(const std::string& what) : Error(what) {}
};

// A callback rate was asked to bound itself over an interval but no
// majorant was supplied at construction.
class MissingMajorant : public Error {
 public:
  explicit MissingMajorant(const std::string& what) : Error(what) {}
};

class ZeroTotalRate : public Error {
 public:
  explicit ZeroTotalRate(const std::string& what) : Error(what) {}
};

class DegeneratePmf : public Error {
 public:
  explicit DegeneratePmf(const std::string& what) : Error(what) {}
};

class UnknownState : public Error {
 public:
  explicit UnknownState(const std::string& what) : Error(what) {}
};

// The uniformization constant fails to dominate the total rate somewhere
// on the requested horizon.
class BoundViolation : public Error {
 public:
  explicit BoundViolation(const std::string& what) : Error(what) {}
};

class AllRatesZero : public Error {
 public:
  explicit AllRatesZero(const std::string& what) : Error(what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace adp
