#include "aqnmf/error.hpp"

namespace aqnmf {

const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::shape: return "shape error";
    case ErrorKind::rank: return "rank error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::size: return "size error";
    case ErrorKind::degenerate: return "degenerate input";
    case ErrorKind::range: return "range error";
    case ErrorKind::io: return "I/O error";
    case ErrorKind::format: return "format error";
    case ErrorKind::conflict: return "conflict error";
    case ErrorKind::imputation: return "imputation error";
    case ErrorKind::empty_rose: return "empty wind rose";
    case ErrorKind::undefined_share: return "undefined share";
    case ErrorKind::coverage: return "coverage error";
    }
    return "error";
}

} // namespace aqnmf
