#pragma once

#include <filesystem>
#include <string>

#include "sbn/frame_stack.hpp"

namespace sbn {

/// Binary stack format errors (bad magic, truncated payload, non-finite
/// values, unsupported PGM variants) are reported as FormatError naming the
/// offending file and byte offset where applicable.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads an SBNT file: magic "SBNT", u16 LE version (1), u32 LE Na, Nr, f,
/// then f*Na*Nr IEEE-754 binary32 LE pixels, frames concatenated row-major.
FrameStack load_stack(const std::filesystem::path& path);

/// Writes `stack` in the SBNT format. Round trips are bit exact.
void save_stack(const FrameStack& stack, const std::filesystem::path& path);

/// Loads every *.pgm file in `dir` (lexicographic filename order) as frames.
/// Only binary PGM ("P5") with maxval 255 is accepted; values map to v/255.
FrameStack import_frames(const std::filesystem::path& dir);

/// Writes one PGM per frame (frame_000000.pgm, ...). With `normalize` set the
/// stack min/max map to 0/255; otherwise values are clamped to [0,1] and
/// scaled by 255.
void export_frames(const FrameStack& stack, const std::filesystem::path& dir, bool normalize);

}  // namespace sbn
