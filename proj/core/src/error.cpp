#include "rwre/error.hpp"

namespace rwre {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::ModelInvalid: return "ModelInvalid";
    case Errc::OverlayInvalid: return "OverlayInvalid";
    case Errc::StartOutside: return "StartOutside";
    case Errc::BadParameter: return "BadParameter";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::RegionTooLarge: return "RegionTooLarge";
    case Errc::DegenerateRho: return "DegenerateRho";
    case Errc::NoRightExit: return "NoRightExit";
    case Errc::SpecInvalid: return "SpecInvalid";
    case Errc::ReferenceMismatch: return "ReferenceMismatch";
    case Errc::DegenerateLadder: return "DegenerateLadder";
    case Errc::SupportTooLarge: return "SupportTooLarge";
    case Errc::DegenerateLaw: return "DegenerateLaw";
    case Errc::NoDrift: return "NoDrift";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::IoFailure: return "IoFailure";
  }
  return "UnknownError";
}

}  // namespace rwre
