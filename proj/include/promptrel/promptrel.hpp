#pragma once

// Sentence-to-prompt topical relevance: corpora, embedding tables, sentence
// vectorizers, weight training and evaluation. Header-only; include this to
// get everything.

#include "promptrel/corpus.hpp"
#include "promptrel/embeddings.hpp"
#include "promptrel/eval.hpp"
#include "promptrel/rng.hpp"
#include "promptrel/trainer.hpp"
#include "promptrel/vectorizers.hpp"
