#pragma once

#include "ssgloss/bench.hpp"
#include "ssgloss/config.hpp"
#include "ssgloss/edge_mask.hpp"
#include "ssgloss/error.hpp"
#include "ssgloss/fast_kernel.hpp"
#include "ssgloss/field_io.hpp"
#include "ssgloss/image.hpp"
#include "ssgloss/image_io.hpp"
#include "ssgloss/loss.hpp"
#include "ssgloss/optimize.hpp"
#include "ssgloss/parallel.hpp"
#include "ssgloss/ssg.hpp"
#include "ssgloss/synthetic.hpp"
