#pragma once

#include "graphcomp/autoencoder.hpp"
#include "graphcomp/bytes.hpp"
#include "graphcomp/common.hpp"
#include "graphcomp/container.hpp"
#include "graphcomp/gcn.hpp"
#include "graphcomp/graph.hpp"
#include "graphcomp/grid.hpp"
#include "graphcomp/huffman.hpp"
#include "graphcomp/meta_select.hpp"
#include "graphcomp/pipeline.hpp"
#include "graphcomp/residual.hpp"
#include "graphcomp/segmentation.hpp"
#include "graphcomp/temporal.hpp"
