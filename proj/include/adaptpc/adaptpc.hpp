#pragma once

#include "adaptpc/error.hpp"
#include "adaptpc/random.hpp"
#include "adaptpc/chaos.hpp"
#include "adaptpc/dataset.hpp"
#include "adaptpc/sparse.hpp"
#include "adaptpc/crossval.hpp"
#include "adaptpc/stiefel.hpp"
#include "adaptpc/adaptation.hpp"
#include "adaptpc/testbeds.hpp"
#include "adaptpc/transform.hpp"
#include "adaptpc/csv.hpp"
#include "adaptpc/density.hpp"
#include "adaptpc/serialize.hpp"
