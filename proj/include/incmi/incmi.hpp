#pragma once

#include "incmi/contingency.hpp"
#include "incmi/covariance.hpp"
#include "incmi/dataio.hpp"
#include "incmi/errors.hpp"
#include "incmi/filters.hpp"
#include "incmi/mi.hpp"
#include "incmi/naive_bayes.hpp"
#include "incmi/oracle.hpp"
#include "incmi/posterior_mode.hpp"
#include "incmi/prequential.hpp"
