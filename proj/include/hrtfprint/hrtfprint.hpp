#pragma once

#include "hrtfprint/corpus.hpp"
#include "hrtfprint/corpus_io.hpp"
#include "hrtfprint/dsp/dsp.hpp"
#include "hrtfprint/dsp/fft.hpp"
#include "hrtfprint/dsp/resample.hpp"
#include "hrtfprint/error.hpp"
#include "hrtfprint/experiments.hpp"
#include "hrtfprint/feature_store.hpp"
#include "hrtfprint/harmonize.hpp"
#include "hrtfprint/matrix.hpp"
#include "hrtfprint/ml/cart.hpp"
#include "hrtfprint/ml/cv.hpp"
#include "hrtfprint/ml/design_matrix.hpp"
#include "hrtfprint/ml/gbt.hpp"
#include "hrtfprint/ml/linear_svm.hpp"
#include "hrtfprint/ml/model.hpp"
#include "hrtfprint/ml/rbf_svm.hpp"
#include "hrtfprint/report.hpp"
#include "hrtfprint/synth.hpp"
