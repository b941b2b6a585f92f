#pragma once

#include <nlohmann/json.hpp>

#include "readout/calfit.hpp"
#include "readout/pipeline.hpp"
#include "readout/rfchain.hpp"
#include "readout/shots.hpp"
#include "readout/twline.hpp"

// JSON views of result types. Non-finite numbers serialize as null.
namespace readout::report {

using nlohmann::json;

json to_json(const rfchain::SystemNoiseResult& r);
json to_json(const rfchain::ChainComparisonRow& r);
json to_json(const calfit::ResonatorFit& f);
json to_json(const calfit::ChiEstimate& c);
json to_json(const calfit::StarkCalibration& s);
json to_json(const calfit::SystemGainEstimate& g);
json to_json(const calfit::NoiseMeasurement& m);
json to_json(const calfit::AddedNoiseResult& n);
json to_json(const calfit::QubitReport& q);
json to_json(const calfit::PipelineReport& p);
json to_json(const calfit::PairedNoiseRow& r);
json to_json(const twline::Stopband& s);
json to_json(const shots::ReadoutStats& s);

}  // namespace readout::report
