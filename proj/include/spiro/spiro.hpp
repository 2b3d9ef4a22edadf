#pragma once

// Umbrella header: the whole library.

#include "spiro/error.hpp"
#include "spiro/seed.hpp"
#include "spiro/app/battery.hpp"
#include "spiro/app/forced.hpp"
#include "spiro/app/positions.hpp"
#include "spiro/app/synth_data.hpp"
#include "spiro/app/tidal_app.hpp"
#include "spiro/features/assemble.hpp"
#include "spiro/features/frames.hpp"
#include "spiro/features/mel.hpp"
#include "spiro/features/temporal.hpp"
#include "spiro/flow/corpus.hpp"
#include "spiro/flow/curves.hpp"
#include "spiro/flow/maneuver.hpp"
#include "spiro/io/accel.hpp"
#include "spiro/io/manifest.hpp"
#include "spiro/io/report.hpp"
#include "spiro/io/wav.hpp"
#include "spiro/learn/dataset.hpp"
#include "spiro/learn/estimator.hpp"
#include "spiro/learn/evaluation.hpp"
#include "spiro/learn/forest.hpp"
#include "spiro/learn/linear.hpp"
#include "spiro/learn/metrics.hpp"
#include "spiro/learn/model_io.hpp"
#include "spiro/learn/selection.hpp"
#include "spiro/learn/svr.hpp"
#include "spiro/signal/envelope.hpp"
#include "spiro/signal/fft.hpp"
#include "spiro/signal/filters.hpp"
#include "spiro/signal/peaks.hpp"
#include "spiro/signal/recording.hpp"
#include "spiro/signal/synth.hpp"
#include "spiro/tidal/classify.hpp"
#include "spiro/tidal/cnn.hpp"
#include "spiro/tidal/respiration.hpp"
#include "spiro/tidal/study.hpp"
#include "spiro/tidal/windows.hpp"
