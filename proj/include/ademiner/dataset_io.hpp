#pragma once

// Native dataset directory: taxonomy.txt, trials.csv, groups.csv,
// treatments.csv, observations.csv, terms.csv.
//
//   trials.csv        trial_id,title,completion_date,trial_type_ids,period_kinds
//   groups.csv        trial_id,period_index,group_id,group_label,n_patients,indication_ids
//   treatments.csv    trial_id,group_id,ap_id,release,route,dose_min,dose_max,dose_unit,intakes_min,intakes_max
//   observations.csv  trial_id,period_index,group_id,term_label,serious,event_count
//   terms.csv         label,meddra_code,soc,category_ids
//
// List-valued cells are ';'-separated. Row order within groups.csv and
// treatments.csv is significant.

#include "ademiner/model.hpp"

#include <map>
#include <string>

namespace ade {

// File name -> contents.
using DatasetFiles = std::map<std::string, std::string>;

DatasetFiles export_dataset(const Dataset& ds);
AssemblyResult import_dataset(const DatasetFiles& files);

void save_dataset(const Dataset& ds, const std::string& dir);
AssemblyResult load_dataset(const std::string& dir);

} // namespace ade
