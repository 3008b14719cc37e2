#pragma once

#include <cstddef>
#include <vector>

#include "sbn/frame_stack.hpp"

namespace sbn {

/// Per-frame integer shift detected relative to the reference frame, plus
/// the normalized cross-correlation score at that shift. The reference
/// frame's shift is (0,0).
struct RegistrationReport {
    struct FrameShift {
        int dy = 0;
        int dx = 0;
        double score = 0.0;
    };
    std::size_t reference = 0;
    std::vector<FrameShift> shifts;
};

struct RegistrationResult {
    FrameStack stack;
    RegistrationReport report;
};

/// Translation-only registration: each frame is searched over integer shifts
/// within +-max_shift (default: min(height,width)/4) for the displacement
/// maximizing normalized cross-correlation against the reference frame, then
/// shifted back by that displacement. Vacated pixels take the frame's median
/// value. Flat frames (zero variance) get shift (0,0).
RegistrationResult register_translation(const FrameStack& stack, std::size_t reference,
                                        int max_shift = -1);

}  // namespace sbn
