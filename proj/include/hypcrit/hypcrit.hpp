#pragma once

#include "hypcrit/errors.hpp"
#include "hypcrit/rational.hpp"
#include "hypcrit/word.hpp"
#include "hypcrit/plane.hpp"
#include "hypcrit/space.hpp"
#include "hypcrit/sampling.hpp"
#include "hypcrit/models.hpp"
#include "hypcrit/actions.hpp"
#include "hypcrit/packing.hpp"
#include "hypcrit/entropy.hpp"
#include "hypcrit/boundary.hpp"
#include "hypcrit/lemmas.hpp"
#include "hypcrit/audits.hpp"
#include "hypcrit/convergence.hpp"
