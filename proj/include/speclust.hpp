#pragma once

#include "speclust/error.hpp"
#include "speclust/data.hpp"
#include "speclust/parallel.hpp"
#include "speclust/kernels.hpp"
#include "speclust/ksc.hpp"
#include "speclust/sksc.hpp"
#include "speclust/metrics.hpp"
#include "speclust/model_selection.hpp"
#include "speclust/community.hpp"
#include "speclust/mksc.hpp"
#include "speclust/iksc.hpp"
#include "speclust/generators.hpp"
#include "speclust/serialization.hpp"
