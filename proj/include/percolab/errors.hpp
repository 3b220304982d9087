#pragma once

#include <stdexcept>
#include <string>

namespace percolab {

// Root of every error the library throws. Callers that only care about
// "something in percolab failed" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// graph_models
class AddressError : public Error { using Error::Error; };
class AdjacencyError : public Error { using Error::Error; };

// bridge_tree
class ConnectivityError : public Error { using Error::Error; };
class MembershipError : public Error { using Error::Error; };
class GraphShapeError : public Error { using Error::Error; };

// exact_oracles
class DomainError : public Error { using Error::Error; };
class SizeError : public Error { using Error::Error; };

// estimators
class BudgetError : public Error { using Error::Error; };
class WindowError : public Error { using Error::Error; };
class DataError : public Error { using Error::Error; };
class RangeError : public Error { using Error::Error; };
class ConfigurationError : public Error { using Error::Error; };

// diagnostics
class IterationError : public Error { using Error::Error; };

}  // namespace percolab
