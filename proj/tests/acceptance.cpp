#include <catch2/catch_amalgamated.hpp>
#include "recgraph/recgraph.hpp"
#include "recgraph/reference.hpp"
