#pragma once

#include "coral_cloze/checkpoint.hpp"
#include "coral_cloze/config.hpp"
#include "coral_cloze/dataset.hpp"
#include "coral_cloze/embeddings.hpp"
#include "coral_cloze/encoder.hpp"
#include "coral_cloze/errors.hpp"
#include "coral_cloze/instance.hpp"
#include "coral_cloze/metrics.hpp"
#include "coral_cloze/model.hpp"
#include "coral_cloze/ordinal.hpp"
#include "coral_cloze/pipeline.hpp"
#include "coral_cloze/random.hpp"
#include "coral_cloze/synthetic.hpp"
#include "coral_cloze/tinynet.hpp"
