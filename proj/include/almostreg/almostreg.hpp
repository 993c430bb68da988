#pragma once

#include "almostreg/ext_real.hpp"
#include "almostreg/spaces.hpp"
#include "almostreg/ekeland.hpp"
#include "almostreg/sampled_map.hpp"
#include "almostreg/regularity.hpp"
#include "almostreg/ioffe.hpp"
#include "almostreg/perturb.hpp"
#include "almostreg/linear.hpp"
#include "almostreg/expression.hpp"
#include "almostreg/scenario.hpp"
