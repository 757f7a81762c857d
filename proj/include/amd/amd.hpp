#pragma once

#include "amd/audio_frontend.hpp"
#include "amd/backbone.hpp"
#include "amd/detection_session.hpp"
#include "amd/errors.hpp"
#include "amd/evaluation.hpp"
#include "amd/gateway.hpp"
#include "amd/gru_classifier.hpp"
#include "amd/logmel.hpp"
#include "amd/silence.hpp"
#include "amd/synthetic_bundles.hpp"
#include "amd/wav.hpp"
#include "amd/weight_bundle.hpp"
#include "amd/wire.hpp"
