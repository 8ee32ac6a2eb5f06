#ifndef MBSC_AUDIO_HPP
#define MBSC_AUDIO_HPP

#include <vector>

namespace mbsc {

// Mono PCM audio held as doubles in [-1, 1] (by convention, not enforced).
struct AudioBuffer {
    int sample_rate = 0;
    std::vector<double> samples;
};

} // namespace mbsc

#endif
