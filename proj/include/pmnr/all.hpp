#pragma once

#include "pmnr/bench.hpp"
#include "pmnr/dualopt.hpp"
#include "pmnr/io.hpp"
#include "pmnr/lp_io.hpp"
#include "pmnr/network.hpp"
#include "pmnr/network_io.hpp"
#include "pmnr/pmnr.hpp"
#include "pmnr/post_tighten.hpp"
#include "pmnr/random_net.hpp"
#include "pmnr/relax.hpp"
#include "pmnr/sbt.hpp"
#include "pmnr/simplex.hpp"
#include "pmnr/verify.hpp"
