#include "firelab/error.hpp"

namespace firelab {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::MalformedVertex: return "malformed_vertex";
    case ErrorKind::Capacity: return "capacity";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::StrategyViolation: return "strategy_violation";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Config: return "config";
    }
    return "unknown";
}

} // namespace firelab
