#pragma once

#include <stdexcept>
#include <string>

namespace gazepet {

// Base for every failure the toolkit reports. Subclasses map onto the error
// kinds named in the module contracts so callers (CLI, gateway) can pick
// exit codes and message kinds without string matching.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

#define GAZEPET_ERROR_KIND(Name, tag)                                  \
    class Name : public Error {                                        \
    public:                                                            \
        using Error::Error;                                            \
        const char* kind() const noexcept override { return tag; }     \
    };

GAZEPET_ERROR_KIND(FormatError, "format")
GAZEPET_ERROR_KIND(UnsupportedError, "unsupported")
GAZEPET_ERROR_KIND(IoError, "io")
GAZEPET_ERROR_KIND(BoundsError, "bounds")
GAZEPET_ERROR_KIND(SpecError, "spec")
GAZEPET_ERROR_KIND(InvalidArgument, "invalid_argument")
GAZEPET_ERROR_KIND(NoCandidateError, "no_candidate")
GAZEPET_ERROR_KIND(StateError, "state")
GAZEPET_ERROR_KIND(IntegrityError, "integrity")
GAZEPET_ERROR_KIND(ReplayMismatchError, "replay_mismatch")
GAZEPET_ERROR_KIND(DegenerateGeometryError, "degenerate_geometry")
GAZEPET_ERROR_KIND(UndefinedIccError, "undefined_icc")
GAZEPET_ERROR_KIND(EmptyReportError, "empty_report")
GAZEPET_ERROR_KIND(ExportError, "export")
GAZEPET_ERROR_KIND(ProtocolError, "protocol")

#undef GAZEPET_ERROR_KIND

}  // namespace gazepet
