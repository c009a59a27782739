#include "cliniq/fixtures.hpp"

#include <filesystem>

#include "cliniq/ioutil.hpp"

namespace cliniq::fixtures {

std::string patients_csv() {
  return
      "ROW_ID,SUBJECT_ID,GENDER,DOB,DOD,DOD_HOSP,DOD_SSN,EXPIRE_FLAG\n"
      "1,101,F,1941-03-18,,,,0\n"
      "2,102,M,1952-11-02,2021-05-14,2021-05-14,,1\n"
      "3,103,F,1978-07-09,,,,0\n"
      "4,104,M,1965-01-30,,,,0\n"
      "5,105,F,1990-12-24,,,,0\n"
      "6,106,F,1933-06-05,2019-02-11,,2019-02-11,1\n";
}

std::string prescriptions_csv() {
  // Patient 105 has no prescriptions on purpose: the join must keep the
  // subject with nulls on the right side.
  return
      "ROW_ID,SUBJECT_ID,HADM_ID,ICUSTAY_ID,STARTDATE,ENDDATE,DRUG_TYPE,DRUG,"
      "DRUG_NAME_GENERIC,FORMULARY_DRUG_CD,PROD_STRENGTH,GSN,NDC,DOSE_VAL_RX,"
      "DOSE_UNIT_RX,ROUTE\n"
      "1,101,5001,20001,2020-01-04,2020-01-11,MAIN,Aspirin,Aspirin,ASA81,"
      "81mg Tab,6221,63739-0434-02,81,mg,PO\n"
      "2,101,5001,20001,2020-01-04,2020-01-18,MAIN,Metoprolol Tartrate,"
      "Metoprolol,METO25,25mg Tab,6431,55390-0603-10,25,mg,PO\n"
      "3,101,5001,,2020-01-05,2020-01-09,MAIN,Furosemide,Furosemide,FURO40,"
      "40mg Tab,8205,51079-0073-20,40,mg,PO\n"
      "4,101,5001,20001,2020-01-06,2020-01-18,MAIN,Atorvastatin,Atorvastatin,"
      "ATOR80,80mg Tab,21642,00071-0157-23,80,mg,PO\n"
      "5,102,5002,20002,2020-02-10,2020-02-14,MAIN,Furosemide,Furosemide,"
      "FURO40,40mg/4mL Vial,8208,00409-6102-01,40,mg,IV\n"
      "6,102,5002,20002,2020-02-10,2020-02-21,MAIN,Warfarin,Warfarin,WARF5,"
      "5mg Tab,11101,00056-0172-75,5,mg,PO\n"
      "7,102,5002,,2020-02-12,2020-02-16,MAIN,Potassium Chloride,,KCL20,"
      "20mEq Packet,21703,00245-0041-01,20,mEq,PO\n"
      "8,102,5002,20002,2020-02-13,2020-02-21,BASE,Ceftriaxone,Ceftriaxone,"
      "CEFT1,1g Vial,3807,00409-7333-01,1,g,IV\n"
      "9,103,5003,20003,2021-06-02,2021-06-12,MAIN,Insulin Glargine,"
      "Insulin Glargine,GLAR10,10mL Vial,28571,00088-2220-33,18,units,SC\n"
      "10,103,5003,20003,2021-06-02,2021-06-12,MAIN,Insulin Lispro,"
      "Insulin Lispro,LISP10,10mL Vial,20554,00002-7510-01,6,units,SC\n"
      "11,103,5003,,2021-06-05,2021-06-12,MAIN,Sertraline,Sertraline,SERT50,"
      "50mg Tab,16681,00049-4900-66,50,mg,PO\n"
      "12,104,5004,20004,2022-09-15,2022-09-25,MAIN,Warfarin,Warfarin,WARF5,"
      "5mg Tab,11101,00056-0172-75,5,mg,PO\n"
      "13,104,5004,20004,2022-09-15,2022-09-20,MAIN,Enoxaparin,Enoxaparin,"
      "ENOX40,40mg Syringe,17556,00075-0624-40,40,mg,SC\n"
      "14,104,5004,20004,2022-09-16,2022-09-25,MAIN,Acetaminophen,"
      "Acetaminophen,ACET650,650mg Tab,4489,51079-0002-20,650,mg,PO\n"
      "15,106,5006,20006,2018-11-20,2018-11-29,MAIN,Oxycodone,Oxycodone,"
      "OXYC5,5mg Tab,46015,00406-0552-62,5,mg,PO\n"
      "16,106,5006,20006,2018-11-20,2018-12-01,MAIN,Docusate Sodium,"
      "Docusate Sodium,DOCU100,100mg Cap,3017,00904-2244-61,100,mg,PO\n"
      "17,106,5006,,2018-11-22,2018-12-01,MAIN,Senna,Senna,SENN8.6,"
      "8.6mg Tab,19964,00904-5165-61,8.6,mg,PO\n";
}

std::string diagnoses_csv() {
  // 99591 is deliberately absent from the dictionary; its titles join to
  // null. Patients 103 and 105 have no diagnosis rows at all.
  return
      "ROW_ID,SUBJECT_ID,HADM_ID,SEQ_NUM,ICD9_CODE\n"
      "1,101,5001,1,4019\n"
      "2,102,5002,1,4280\n"
      "3,102,5002,2,5849\n"
      "4,104,5004,1,V5861\n"
      "5,106,5006,1,99591\n";
}

std::string diagnosis_dictionary_csv() {
  return
      "ICD9_CODE,SHORT_TITLE,LONG_TITLE\n"
      "4019,Hypertension NOS,Unspecified essential hypertension\n"
      "4280,CHF NOS,\"Congestive heart failure, unspecified\"\n"
      "5849,Acute kidney failure NOS,\"Acute kidney failure, unspecified\"\n"
      "V5861,Long-term use anticoagul,Long-term (current) use of anticoagulants\n";
}

const std::vector<std::string>& clinical_note_sentences() {
  // Each sentence is exactly 15 words plus the trailing period: 16 tokens.
  static const std::vector<std::string> sentences = {
      "The patient was admitted overnight after presenting with crushing substernal chest pain and profuse diaphoresis.",
      "Initial electrocardiogram demonstrated ST elevation in the inferior leads with clear reciprocal depression laterally noted.",
      "Cardiology performed emergent catheterization and placed a drug eluting stent in the right coronary artery.",
      "Following reperfusion the troponin level peaked quickly and then trended steadily downward over two days.",
      "Echocardiography revealed an ejection fraction of forty percent with mild inferior wall motion abnormality present.",
      "Aspirin clopidogrel and high intensity atorvastatin were all started for secondary prevention before morning rounds.",
      "Telemetry captured brief runs of nonsustained ventricular tachycardia that resolved without any further intervention needed.",
      "Metoprolol tartrate was uptitrated slowly while blood pressure and heart rate remained within goal range.",
      "On hospital day two the patient developed acute shortness of breath while ambulating the hallways.",
      "Chest radiography showed mild pulmonary vascular congestion with small bilateral effusions layering at the bases.",
      "Intravenous furosemide produced a brisk diuresis and the breathing improved markedly by the evening assessment.",
      "Renal function dipped transiently with creatinine rising briefly before returning toward baseline after gentle hydration.",
      "Nephrology recommended holding lisinopril until the kidney numbers stabilized and urine output normalized completely again.",
      "A bedside bladder scan demonstrated minimal residual volume so the urinary catheter was removed early.",
      "Physical exam prior to surgery was not obtained since the patient was intubated and sedated.",
      "The anesthesia team documented a difficult airway requiring video laryngoscopy and a smaller endotracheal tube.",
      "Intraoperative blood loss was minimal and no transfusion of packed red blood cells was required.",
      "The surgical wound remained clean dry and intact with staples holding excellent approximation throughout recovery.",
      "Postoperative pain was well controlled with scheduled acetaminophen and low dose oxycodone for breakthrough episodes.",
      "Physical therapy evaluated mobility today and recommended a front wheeled walker for safe household ambulation.",
      "Occupational therapy assessed activities of daily living and suggested helpful adaptive equipment for bathing safely.",
      "A formal swallow evaluation cleared the patient for a regular diet with thin liquids tolerated.",
      "Endocrinology adjusted the insulin regimen after several fasting glucose readings exceeded the agreed target range.",
      "Hemoglobin alc returned elevated suggesting suboptimal longterm glycemic control requiring much closer outpatient followup monitoring.",
      "Basal glargine was increased at bedtime while the mealtime lispro coverage remained unchanged for now.",
      "The morning metabolic panel showed mild hypokalemia which was promptly repleted with oral potassium chloride.",
      "Magnesium was simultaneously low and was corrected with a single intravenous infusion during the afternoon.",
      "Blood cultures drawn at admission showed no growth after five full days of incubation finalized.",
      "A urinalysis was bland without pyuria nitrites or bacteria making urinary infection very unlikely overall.",
      "Empiric ceftriaxone was therefore discontinued after the infectious workup returned reassuringly negative later this week.",
      "The patient reported improved appetite and tolerated three full meals without any nausea or emesis.",
      "A gentle bowel regimen of docusate and senna prevented constipation from the scheduled opioid analgesics.",
      "Deep vein thrombosis prophylaxis was continued with subcutaneous enoxaparin given nightly at the prophylactic dose.",
      "Bilateral lower extremity duplex ultrasound found no evidence of any acute or chronic venous thrombus.",
      "Pharmacy reconciled all home medications and flagged a duplicate statin order for prompt removal today.",
      "Social work met with family members to coordinate transportation and arrange home health nursing services.",
      "Case management confirmed insurance authorization for a short subacute rehabilitation stay after the hospital discharge.",
      "Neurology was consulted for transient word finding difficulty that resolved completely within thirty brief minutes.",
      "Magnetic resonance imaging of the brain showed chronic microvascular changes without any acute infarct identified.",
      "Carotid duplex demonstrated less than fifty percent stenosis bilaterally without any hemodynamically significant flow limitation.",
      "Speech therapy screened cognition and communication finding no persistent deficits requiring any ongoing formal services.",
      "Dermatology examined a stage two sacral pressure injury and recommended foam dressings with regular offloading.",
      "Nursing implemented a strict two hour turning schedule and documented steady granulation at the wound.",
      "Nutrition services calculated protein requirements and added twice daily supplements to support ongoing tissue healing.",
      "Psychiatry evaluated low mood and recommended starting sertraline with outpatient therapy after the discharge date.",
      "Sleep improved after clustering overnight care activities and minimizing unnecessary equipment alarms inside the room.",
      "Ophthalmology performed a bedside exam showing no diabetic retinopathy progression since the last documented visit.",
      "Vital signs this morning were quite stable with temperature pulse and pressure within normal limits.",
      "The discharge summary listed followup appointments with cardiology endocrinology and the primary care physician together.",
      "The patient verbalized understanding of all medication changes and red flag symptoms warranting urgent return.",
  };
  return sentences;
}

std::string clinical_note_text() {
  std::string out;
  for (const auto& s : clinical_note_sentences()) {
    out += s;
    out.push_back('\n');
  }
  return out;
}

std::string default_templates_text() {
  return
      "# Question templates for the structured suite.\n"
      "#\n"
      "# Each [template] block pairs a question pattern with the program that\n"
      "# computes its gold answer. Placeholders are drawn from the live table:\n"
      "#   {STRCOL}   a text column            {STRVAL}  a value of that column\n"
      "#   {NUMCOL}   a numeric column         {DATECOL} a date column\n"
      "#   {AGG}      an aggregate function    {AGG_NAME} its English name\n"
      "#   {INT:lo:hi} a uniform integer in [lo, hi]\n"
      "# The optional tags line documents the expected complexity\n"
      "# (ops=N, preprocessing, aggregation=NAME); the generator recomputes\n"
      "# complexity from the instantiated program and skips a case whose tags\n"
      "# disagree.\n"
      "\n"
      "[template]\n"
      "question = What is the median age?\n"
      "program = DERIVE AGE = YEARS_BETWEEN(DOB_Demo, @ref) | AGGREGATE MEDIAN(AGE)\n"
      "tags = ops=2, preprocessing, aggregation=median\n"
      "\n"
      "[template]\n"
      "question = What is the median age of female subjects?\n"
      "program = FILTER GENDER == \"F\" | DERIVE AGE = YEARS_BETWEEN(DOB_Demo, @ref) | AGGREGATE MEDIAN(AGE)\n"
      "tags = ops=3, preprocessing, aggregation=median\n"
      "\n"
      "[template]\n"
      "question = How many rows does the table contain?\n"
      "program = AGGREGATE COUNT(*)\n"
      "tags = ops=1, aggregation=count\n"
      "\n"
      "[template]\n"
      "question = How many distinct values of {STRCOL} are there?\n"
      "program = AGGREGATE COUNT_DISTINCT({STRCOL})\n"
      "tags = ops=1, aggregation=count_distinct\n"
      "\n"
      "[template]\n"
      "question = How many rows have {STRCOL} equal to {STRVAL}?\n"
      "program = FILTER {STRCOL} == \"{STRVAL}\" | AGGREGATE COUNT(*)\n"
      "tags = ops=2, aggregation=count\n"
      "\n"
      "[template]\n"
      "question = What is the {AGG_NAME} of {NUMCOL}?\n"
      "program = AGGREGATE {AGG}({NUMCOL})\n"
      "tags = ops=1\n"
      "\n"
      "[template]\n"
      "question = What is the {AGG_NAME} of {NUMCOL} for rows where {STRCOL} is {STRVAL}?\n"
      "program = FILTER {STRCOL} == \"{STRVAL}\" | AGGREGATE {AGG}({NUMCOL})\n"
      "tags = ops=2\n"
      "\n"
      "[template]\n"
      "question = Which {STRCOL} value appears on the most rows?\n"
      "program = GROUP BY {STRCOL} | AGGREGATE COUNT(*) | SORT COUNT DESC | LIMIT 1\n"
      "tags = ops=4, aggregation=count\n"
      "\n"
      "[template]\n"
      "question = How many rows belong to subjects older than {INT:40:75}?\n"
      "program = DERIVE AGE = YEARS_BETWEEN(DOB_Demo, @ref) | FILTER AGE > {INT:40:75} | AGGREGATE COUNT(*)\n"
      "tags = ops=3, preprocessing, aggregation=count\n"
      "\n"
      "[template]\n"
      "question = What is the earliest {DATECOL} in the table?\n"
      "program = AGGREGATE MIN({DATECOL})\n"
      "tags = ops=1, aggregation=min\n";
}

std::string example_config_text() {
  std::string keep;
  for (const auto& name : merged_columns()) {
    if (!keep.empty()) keep += ", ";
    keep += name;
  }
  return
      "# Offline demo configuration. Paths are relative to the directory the\n"
      "# commands run in; point them elsewhere for real data.\n"
      "patients_csv = fixtures/PATIENTS.csv\n"
      "prescriptions_csv = fixtures/PRESCRIPTIONS.csv\n"
      "diagnoses_csv = fixtures/DIAGNOSES_ICD.csv\n"
      "diagnosis_dictionary_csv = fixtures/D_ICD_DIAGNOSES.csv\n"
      "note_txt = fixtures/clinical_note.txt\n"
      "templates_path = fixtures/templates.txt\n"
      "output_dir = out\n"
      "# The raw join keeps every input column; ingest projects it down to\n"
      "# the working feature set.\n"
      "keep_columns = " + keep + "\n"
      "\n"
      "cohort.n_patients = 101\n"
      "cohort.seed = 7\n"
      "cohort.dob_start = 1930-01-01\n"
      "cohort.dob_end = 2000-12-31\n"
      "reference_date = 2026-01-01\n"
      "\n"
      "chunking.size = 16\n"
      "chunking.overlap = 0\n"
      "retrieval.k = 4\n"
      "\n"
      "seed = 7\n"
      "workers = 1\n"
      "\n"
      "# A deterministic scripted endpoint; swap kind/base_url/credential_env\n"
      "# for a real chat API.\n"
      "endpoint.demo.kind = scripted_stub\n"
      "endpoint.demo.script_path = out/stub_structured.jsonl\n"
      "endpoint.demo.fallback = error\n"
      "\n"
      "endpoint.echo.kind = scripted_stub\n"
      "endpoint.echo.fallback = echo\n";
}

const std::vector<std::string>& merged_columns() {
  static const std::vector<std::string> cols = {
      "SUBJECT_ID",  "GENDER",       "DOB_Demo",
      "DOD",         "EXPIRE_FLAG",  "HADM_ID",
      "ICUSTAY_ID",  "STARTDATE",    "ENDDATE",
      "DRUG_TYPE",   "DRUG",         "DRUG_NAME_GENERIC",
      "FORMULARY_DRUG_CD", "PROD_STRENGTH", "GSN",
      "NDC",         "DOSE_VAL_RX",  "DOSE_UNIT_RX",
      "ROUTE",       "SEQ_NUM",      "ICD9_CODE",
      "SHORT_TITLE", "LONG_TITLE",
  };
  return cols;
}

std::vector<std::string> write_fixture_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::vector<std::pair<std::string, std::string>> files = {
      {"PATIENTS.csv", patients_csv()},
      {"PRESCRIPTIONS.csv", prescriptions_csv()},
      {"DIAGNOSES_ICD.csv", diagnoses_csv()},
      {"D_ICD_DIAGNOSES.csv", diagnosis_dictionary_csv()},
      {"clinical_note.txt", clinical_note_text()},
      {"templates.txt", default_templates_text()},
      {"run.conf", example_config_text()},
  };
  std::vector<std::string> written;
  for (const auto& [name, content] : files) {
    const std::string path = (std::filesystem::path(dir) / name).string();
    write_file_atomic(path, content);
    written.push_back(path);
  }
  return written;
}

}  // namespace cliniq::fixtures
