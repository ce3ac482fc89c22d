#include "itm/errors.hpp"

namespace itm {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Format: return "format error";
    case ErrorKind::Data: return "data error";
    case ErrorKind::Write: return "write error";
    case ErrorKind::Compatibility: return "compatibility error";
    case ErrorKind::Style: return "style error";
    case ErrorKind::Size: return "size error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Pairing: return "pairing error";
    case ErrorKind::Corpus: return "corpus error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Training: return "training error";
    case ErrorKind::Usage: return "usage error";
  }
  return "error";
}

}  // namespace itm
