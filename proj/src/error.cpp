#include "hearth/error.hpp"

#include <array>

namespace hearth {

std::string_view errc_name(Errc code) {
  static constexpr std::array<std::string_view, 24> kNames{
      "EmptySalt",         "MissingTemplate",       "InfeasibleQuota",
      "NotEnoughEntries",  "EmptyText",             "ZeroDenominator",
      "UnknownAxis",       "NegativeOrNonFinite",   "EndpointUnreachable",
      "EmptyAxisSet",      "OutOfRange",            "MalformedTrace",
      "NoConsent",         "EmptyCohort",           "EmptyLog",
      "DegenerateSample",  "DegenerateLabels",      "CorruptProfile",
      "NonMonotonicTimestamp", "LockHeld",          "ParseError",
      "ConfigError",       "InputError",            "Precondition",
  };
  return kNames.at(static_cast<std::size_t>(code));
}

}  // namespace hearth
