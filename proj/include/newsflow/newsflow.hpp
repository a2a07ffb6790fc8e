#pragma once
// Umbrella header for the news-driven price movement pipeline.

#include "newsflow/config.hpp"
#include "newsflow/dataset.hpp"
#include "newsflow/distiller.hpp"
#include "newsflow/embeddings.hpp"
#include "newsflow/evaluation.hpp"
#include "newsflow/model.hpp"
#include "newsflow/numerics.hpp"
#include "newsflow/pipeline.hpp"
#include "newsflow/prices.hpp"
#include "newsflow/synth.hpp"
#include "newsflow/training.hpp"
