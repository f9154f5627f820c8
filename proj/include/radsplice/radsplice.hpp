#ifndef RADSPLICE_RADSPLICE_HPP
#define RADSPLICE_RADSPLICE_HPP

#include "radsplice/error.hpp"
#include "radsplice/geometry.hpp"
#include "radsplice/distortion_model.hpp"
#include "radsplice/image.hpp"
#include "radsplice/image_io.hpp"
#include "radsplice/edge_detection.hpp"
#include "radsplice/segment_extraction.hpp"
#include "radsplice/k1_estimation.hpp"
#include "radsplice/consistency.hpp"
#include "radsplice/pipeline.hpp"
#include "radsplice/synth.hpp"
#include "radsplice/corpus.hpp"
#include "radsplice/serialization.hpp"
#include "radsplice/svg.hpp"

#endif
