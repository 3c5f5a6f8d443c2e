#pragma once

#include "gdon/autodiff.hpp"
#include "gdon/data.hpp"
#include "gdon/error.hpp"
#include "gdon/evaluation.hpp"
#include "gdon/geometry.hpp"
#include "gdon/io.hpp"
#include "gdon/model.hpp"
#include "gdon/nn.hpp"
#include "gdon/training.hpp"
