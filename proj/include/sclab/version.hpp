#pragma once

namespace sclab {

// Version tags recorded in on-disk artifacts. Bump whenever the
// corresponding format or generator behaviour changes.
inline constexpr const char* kCorpusVersion = "sclab-corpus-v1";
inline constexpr const char* kCheckpointMagic = "SCLAB-CKPT-v1";
inline constexpr const char* kArtifactVersion = "sclab-v1";

}  // namespace sclab
