// Copyright 2026 The Sentiment Authors. Apache 2.0 License.
#pragma once

#include "sentiment/checkpoint.hpp"
#include "sentiment/embeddings.hpp"
#include "sentiment/errors.hpp"
#include "sentiment/evaluation.hpp"
#include "sentiment/layers.hpp"
#include "sentiment/parallel.hpp"
#include "sentiment/random.hpp"
#include "sentiment/stopwords.hpp"
#include "sentiment/tensor.hpp"
#include "sentiment/text_pipeline.hpp"
#include "sentiment/training.hpp"
