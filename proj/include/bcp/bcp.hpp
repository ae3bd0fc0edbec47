#ifndef BCP_BCP_HPP
#define BCP_BCP_HPP

#include "bcp/backward.hpp"
#include "bcp/bounds.hpp"
#include "bcp/csv.hpp"
#include "bcp/error.hpp"
#include "bcp/evalues.hpp"
#include "bcp/harness.hpp"
#include "bcp/loo.hpp"
#include "bcp/matrix.hpp"
#include "bcp/pca.hpp"
#include "bcp/report.hpp"
#include "bcp/rules.hpp"
#include "bcp/scores.hpp"

#endif
