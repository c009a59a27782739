#pragma once

#include <string>
#include <vector>

namespace cliniq::fixtures {

// Deterministic demo dataset shaped like a de-identified critical-care
// extract: four CSVs that join into one wide table, a 50-sentence clinical
// note, and the default structured question templates. Small enough to read
// by eye, rich enough to exercise every join and query path (a patient with
// no prescriptions, a diagnosis code missing from the dictionary, null
// cells, dates, and mixed column kinds).

std::string patients_csv();              // 6 patients
std::string prescriptions_csv();         // 17 prescriptions
std::string diagnoses_csv();             // 5 diagnosis rows
std::string diagnosis_dictionary_csv();  // 4 code descriptions

// Exactly 50 sentences, one per line, each sentence exactly 16 tokens
// (15 words and the final period), 800 tokens total.
std::string clinical_note_text();
const std::vector<std::string>& clinical_note_sentences();

// The shipped question-template set for the structured suite.
std::string default_templates_text();

// A ready-to-run offline configuration pointing at the files
// write_fixture_dir lays down.
std::string example_config_text();

// The 23 columns the ingest step keeps from the raw join, in order.
const std::vector<std::string>& merged_columns();

// Writes every fixture file into dir (created if needed); returns the paths
// written, in write order.
std::vector<std::string> write_fixture_dir(const std::string& dir);

}  // namespace cliniq::fixtures
