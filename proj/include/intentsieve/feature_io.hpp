#ifndef INTENTSIEVE_FEATURE_IO_HPP
#define INTENTSIEVE_FEATURE_IO_HPP

#include <string>

#include "intentsieve/dsp.hpp"

namespace isv::dsp {

// Feature dump format: one ASCII header line "ISF1 <rows> <cols>\n"
// followed by rows*cols row-major little-endian 32-bit floats.

void save_feature(const std::string& path, const AcousticFeature& f);
AcousticFeature load_feature(const std::string& path);

}  // namespace isv::dsp

#endif  // INTENTSIEVE_FEATURE_IO_HPP
