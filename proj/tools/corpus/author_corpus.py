#!/usr/bin/env python3
"""Authors the bundled synthetic rescue-service corpus.

The content is invented for testing. It mirrors the structure of a real
treatment-path manual (entry node, cABCDE chain, disease groups, BPR and SAA
paths, jump hubs, information nodes) without reproducing any real manual.

Writes one node or edge object per line so that count_manifest.py can derive
the expected counts with a plain line scan.

    python3 tools/corpus/author_corpus.py corpus/kirett_sample.json
"""

import json
import sys

NODES = []
EDGES = []


def node(id_, name, kind, **props):
    entry = {"id": id_, "name": name, "kind": kind}
    for key in ("bpr", "saa", "d_type", "value", "min", "max", "unit", "range_branch"):
        if key in props:
            entry[key] = props[key]
    NODES.append(entry)


def r(src, dst, rank=1):
    EDGES.append({"from": src, "to": dst, "kind": "R", "rank": rank})


def yes(src, dst):
    EDGES.append({"from": src, "to": dst, "kind": "yes"})


def no(src, dst):
    EDGES.append({"from": src, "to": dst, "kind": "no"})


def link(kind, src, dst):
    EDGES.append({"from": src, "to": dst, "kind": kind})


def both(kind, a, b):
    link(kind, a, b)
    link(kind, b, a)


# --- entry layer -----------------------------------------------------------
node("start", "Start", "Start")
node("stop_handover", "Übergabe in der Klinik", "Stop")
node("stop_saa", "SAA abgeschlossen", "Stop")
node("stop_no_transport", "Einsatzende ohne Transport", "Stop")

node("sd_questionnaire", "Fragebogen: Welche Erkrankungsgruppe liegt vor?", "DecisionOR", bpr="einstieg")
node("dg_cardio", "Erkrankungsgruppe Herz-Kreislauf", "DiseaseGroup")
node("dg_metabolic", "Erkrankungsgruppe Stoffwechsel", "DiseaseGroup")
node("dg_respiratory", "Erkrankungsgruppe Atmung", "DiseaseGroup")

node("hub_bpr", "Sprungknoten: alle BPR", "JumpBPR")
node("hub_saa", "Sprungknoten: alle SAA", "JumpSAA")
node("hub_dg", "Sprungknoten: alle Erkrankungsgruppen", "JumpDiseaseGroup")

r("start", "cabcde_c", 1)
r("start", "sd_questionnaire", 2)
r("sd_questionnaire", "dg_cardio", 1)
r("sd_questionnaire", "dg_metabolic", 2)
r("sd_questionnaire", "dg_respiratory", 3)
r("dg_cardio", "bpr_acs")
r("dg_metabolic", "bpr_hypo")
r("dg_respiratory", "bpr_asthma")
link("bpr", "dg_cardio", "bpr_acs")
link("bpr", "dg_metabolic", "bpr_hypo")
link("bpr", "dg_metabolic", "bpr_hyper")
link("bpr", "dg_respiratory", "bpr_asthma")

# --- cABCDE chain (synthetic; the manual's concrete steps are not reproduced)
C = {"bpr": "cabcde"}
node("cabcde_c", "c: Kritische Blutung ausgeschlossen?", "DecisionYN", **C)
node("cabcde_c_act", "Blutung stillen (Druckverband, Tourniquet)", "Action", **C)
node("cabcde_a", "A: Atemweg frei?", "DecisionYN", **C)
node("cabcde_a_act", "Atemweg freimachen und sichern", "Procedure", **C)
node("cabcde_b", "B: Sauerstoffsättigung im Zielbereich?", "DecisionYN", **C,
     d_type="vital", value="SPO2", min=94, unit="%")
node("cabcde_b_act", "Sauerstoffgabe, Atmung unterstützen", "Action", **C)
node("cabcde_circ", "C: Herzfrequenz im Normbereich?", "DecisionYN", **C,
     d_type="vital", value="PULSE", min=50, max=120, unit="/min")
node("cabcde_circ_act", "Kreislauf stabilisieren, i.v.-Zugang erwägen", "Action", **C)
node("cabcde_d", "D: Blutzucker ≤ 60 mg/dl?", "DecisionYN", **C,
     d_type="vital", value="BLOOD_SUGAR", max=60, unit="mg/dl", range_branch="yes")
node("cabcde_e", "E: Untersuchung und Wärmeerhalt", "Action", **C)
node("cabcde_ecg", "12-Kanal-EKG ableiten", "Procedure", **C)
node("cabcde_transport", "Transport erforderlich?", "DecisionYN", **C)
node("cabcde_handover", "Transport in die Klinik", "Action", **C)
node("cabcde_refusal", "Dokumentation und Verbleib vor Ort", "Action", **C)
node("info_cabcde", "cABCDE: strukturierte Ersteinschätzung, Befunde laufend neu bewerten", "Display")

yes("cabcde_c", "cabcde_a")
no("cabcde_c", "cabcde_c_act")
r("cabcde_c_act", "cabcde_a")
yes("cabcde_a", "cabcde_b")
no("cabcde_a", "cabcde_a_act")
r("cabcde_a_act", "cabcde_b")
yes("cabcde_b", "cabcde_circ")
no("cabcde_b", "cabcde_b_act")
r("cabcde_b_act", "cabcde_circ")
yes("cabcde_circ", "cabcde_d")
no("cabcde_circ", "cabcde_circ_act")
r("cabcde_circ_act", "cabcde_d")
yes("cabcde_d", "bpr_hypo")
no("cabcde_d", "cabcde_e")
r("cabcde_e", "cabcde_ecg")
r("cabcde_ecg", "cabcde_transport")
yes("cabcde_transport", "cabcde_handover")
no("cabcde_transport", "cabcde_refusal")
r("cabcde_handover", "stop_handover")
r("cabcde_refusal", "stop_no_transport")
link("additionalInformation", "cabcde_c", "info_cabcde")
link("bpr", "cabcde_b_act", "bpr_asthma")
link("saa", "cabcde_circ_act", "saa_iv")
both("association", "cabcde_ecg", "acs_ecg")

# --- BPR hypoglycemia ------------------------------------------------------
H = {"bpr": "hypoglykaemie"}
BS = {"d_type": "vital", "value": "BLOOD_SUGAR", "max": 60, "unit": "mg/dl", "range_branch": "yes"}
node("bpr_hypo", "BPR Hypoglykämie", "BPR", **H)
node("hypo_bs_check", "Blutzucker ≤ 60 mg/dl?", "DecisionYN", **H, **BS)
node("hypo_other", "Andere Ursachen der Bewusstseinsstörung abklären", "Action", **H)
node("hypo_awake", "Patient wach und schluckfähig?", "DecisionYN", **H)
node("hypo_oral_glucose", "Orale Glukosegabe", "Action", **H)
node("hypo_iv_access", "i.v.-Zugang", "Procedure", **H)
node("hypo_glucose_iv", "Glukose 40 % i.v.", "InvasiveProcedure", **H)
node("hypo_bs_recheck", "Blutzucker-Kontrolle: weiterhin ≤ 60 mg/dl?", "DecisionYN", **H, **BS)
node("hypo_monitor", "Überwachung und Transport in die Klinik", "Action", **H)
node("info_oral_glucose", "Orale Gabe: 20 g Glukose, nur bei erhaltenem Schluckreflex", "Display")
node("info_glucose_dose", "Dosisberechnung Glukose 40 %: 0,2 g/kg KG, titriert nach Wirkung", "Display")
node("warn_paravasate", "Warnung: Paravasat vermeiden, nur in sicher liegenden Zugang", "Warning")

r("bpr_hypo", "hypo_bs_check")
yes("hypo_bs_check", "hypo_awake")
no("hypo_bs_check", "hypo_other")
r("hypo_other", "hypo_monitor")
yes("hypo_awake", "hypo_oral_glucose")
no("hypo_awake", "hypo_iv_access")
r("hypo_oral_glucose", "hypo_bs_recheck")
r("hypo_iv_access", "hypo_glucose_iv")
r("hypo_glucose_iv", "hypo_bs_recheck")
yes("hypo_bs_recheck", "hypo_awake")
no("hypo_bs_recheck", "hypo_monitor")
r("hypo_monitor", "stop_handover")
link("additionalInformation", "hypo_oral_glucose", "info_oral_glucose")
link("additionalInformation", "hypo_iv_access", "info_glucose_dose")
link("additionalInformation", "hypo_glucose_iv", "warn_paravasate")
link("additionalInformation", "hypo_glucose_iv", "info_glucose_dose")
link("saa", "hypo_iv_access", "saa_iv")
link("bpr", "hypo_other", "bpr_hyper")

# --- BPR hyperglycemia (short) ---------------------------------------------
Y = {"bpr": "hyperglykaemie"}
node("bpr_hyper", "BPR Hyperglykämie", "BPR", **Y)
node("hyper_bs_check", "Blutzucker ≥ 250 mg/dl?", "DecisionYN", **Y,
     d_type="vital", value="BLOOD_SUGAR", min=250, unit="mg/dl", range_branch="yes")
node("hyper_fluids", "Volumengabe nach SAA", "Procedure", **Y)
node("hyper_monitor", "Überwachung, Transport in die Klinik", "Action", **Y)
r("bpr_hyper", "hyper_bs_check")
yes("hyper_bs_check", "hyper_fluids")
no("hyper_bs_check", "hyper_monitor")
r("hyper_fluids", "hyper_monitor")
r("hyper_monitor", "stop_handover")
link("saa", "hyper_fluids", "saa_iv")

# --- BPR acute coronary syndrome -------------------------------------------
A = {"bpr": "acs"}
node("bpr_acs", "BPR Akutes Koronarsyndrom", "BPR", **A)
node("acs_ecg", "12-Kanal-EKG (ACS)", "Procedure", **A)
node("acs_stemi", "ST-Hebung im EKG?", "DecisionYN", **A)
node("acs_cathlab", "Zielklinik mit Herzkatheterlabor voranmelden", "Action", **A)
node("acs_rate", "Herzfrequenz zwischen 50 und 100/min?", "DecisionYN", **A,
     d_type="vital", value="PULSE", min=50, max=100, unit="/min")
node("acs_rate_act", "Rhythmusstörung behandeln, Notarzt nachfordern", "Action", **A)
node("acs_meds", "Analgesie und Thrombozytenaggregationshemmung", "Procedure", **A)
node("acs_transport", "Transport unter Monitoring", "Action", **A)
node("warn_acs_contra", "Warnung: Kontraindikationen vor Medikamentengabe prüfen", "Warning")
node("info_acs_ecg", "EKG: Ableitungen V1-V6, rechtsventrikuläre Ableitungen erwägen", "Display")

r("bpr_acs", "acs_ecg")
r("acs_ecg", "acs_stemi")
yes("acs_stemi", "acs_cathlab")
no("acs_stemi", "acs_rate")
r("acs_cathlab", "acs_rate")
yes("acs_rate", "acs_meds")
no("acs_rate", "acs_rate_act")
r("acs_rate_act", "acs_meds")
r("acs_meds", "acs_transport")
r("acs_transport", "stop_handover")
link("additionalInformation", "acs_meds", "warn_acs_contra")
link("additionalInformation", "acs_ecg", "info_acs_ecg")
link("saa", "acs_meds", "saa_analgesia")
link("saa", "acs_meds", "saa_iv")

# --- BPR asthma / obstructive airway ---------------------------------------
S = {"bpr": "asthma"}
node("bpr_asthma", "BPR Asthma / obstruktive Atemwegserkrankung", "BPR", **S)
node("asthma_spo2", "Sauerstoffsättigung ≥ 92 %?", "DecisionYN", **S,
     d_type="vital", value="SPO2", min=92, unit="%", range_branch="yes")
node("asthma_oxygen", "Sauerstoffgabe", "Action", **S)
node("asthma_auscultation", "Auskultationsbefund?", "DecisionOR", **S)
node("asthma_obstructive", "Giemen / Brummen / Spastik / Exspiratorischer Stridor", "Action", **S)
node("asthma_crackles", "Rasselgeräusche / grobblasige Rasselgeräusche", "Action", **S)
node("asthma_unclear", "Unauffällig / nicht eindeutig", "Action", **S)
node("asthma_bronchodilator", "Inhalation Beta-2-Sympathomimetikum", "Procedure", **S)
node("asthma_reassess", "Besserung der Atemnot?", "DecisionYN", **S)
node("asthma_escalate", "Notarzt nachfordern", "Action", **S)
node("asthma_transport", "Transport in die Klinik", "Action", **S)
node("warn_asthma_exhaustion", "Warnung: Erschöpfung und Silent Chest sind Alarmzeichen", "Warning")

r("bpr_asthma", "asthma_spo2")
yes("asthma_spo2", "asthma_auscultation")
no("asthma_spo2", "asthma_oxygen")
r("asthma_oxygen", "asthma_auscultation")
r("asthma_auscultation", "asthma_obstructive", 1)
r("asthma_auscultation", "asthma_crackles", 2)
r("asthma_auscultation", "asthma_unclear", "n")
r("asthma_obstructive", "asthma_bronchodilator")
r("asthma_crackles", "asthma_reassess")
r("asthma_unclear", "asthma_reassess")
r("asthma_bronchodilator", "asthma_reassess")
yes("asthma_reassess", "asthma_transport")
no("asthma_reassess", "asthma_escalate")
r("asthma_escalate", "asthma_transport")
r("asthma_transport", "stop_handover")
link("additionalInformation", "asthma_reassess", "warn_asthma_exhaustion")
link("saa", "asthma_bronchodilator", "saa_inhalation")
link("bpr", "asthma_crackles", "bpr_acs")

# --- SAA i.v. access -------------------------------------------------------
V = {"saa": "iv_zugang"}
node("saa_iv", "SAA i.v.-Zugang", "SAA", **V)
node("iv_prepare", "Material vorbereiten, Hygiene beachten", "Action", **V)
node("iv_puncture", "Venenpunktion und Fixierung", "InvasiveProcedure", **V)
node("iv_check", "Zugang sicher intravasal?", "DecisionYN", **V)
node("iv_document", "Zugang dokumentieren", "Action", **V)
node("warn_iv_contra", "Warnung: nicht am Shunt-Arm oder bei Lymphödem punktieren", "Warning")
r("saa_iv", "iv_prepare")
r("iv_prepare", "iv_puncture")
r("iv_puncture", "iv_check")
yes("iv_check", "iv_document")
no("iv_check", "iv_prepare")
r("iv_document", "stop_saa")
link("additionalInformation", "iv_puncture", "warn_iv_contra")

# --- SAA analgesia ---------------------------------------------------------
G = {"saa": "analgesie"}
node("saa_analgesia", "SAA Analgesie", "SAA", **G)
node("an_pain", "Schmerzstärke NRS ≥ 5?", "DecisionYN", **G)
node("an_contra", "Kontraindikationen ausgeschlossen?", "DecisionYN", **G)
node("an_give", "Analgetikum i.v. nach Dosierschema", "InvasiveProcedure", **G)
node("an_reassess", "Wirkung und Vitalparameter überwachen", "Action", **G)
node("info_an_dose", "Dosisberechnung Analgetikum: mg/kg KG nach Tabelle, Höchstdosis beachten", "Display")
r("saa_analgesia", "an_pain")
yes("an_pain", "an_contra")
no("an_pain", "an_reassess")
yes("an_contra", "an_give")
no("an_contra", "an_reassess")
r("an_give", "an_reassess")
r("an_reassess", "stop_saa")
link("additionalInformation", "an_give", "info_an_dose")
link("saa", "an_give", "saa_iv")

# --- SAA inhalation --------------------------------------------------------
I = {"saa": "inhalation"}
node("saa_inhalation", "SAA Inhalation", "SAA", **I)
node("inh_prepare", "Vernebler mit Salbutamol vorbereiten", "Action", **I)
node("inh_give", "Inhalation durchführen", "Procedure", **I)
node("info_inh_dose", "Salbutamol: 2,5 mg vernebelt, Wiederholung nach Wirkung", "Display")
r("saa_inhalation", "inh_prepare")
r("inh_prepare", "inh_give")
r("inh_give", "stop_saa")
link("additionalInformation", "inh_give", "info_inh_dose")

# --- jump hubs (opposed pairs to every node of the target kind) ------------
for bpr in ("bpr_acs", "bpr_asthma", "bpr_hyper", "bpr_hypo"):
    both("bpr", "hub_bpr", bpr)
for saa in ("saa_analgesia", "saa_inhalation", "saa_iv"):
    both("saa", "hub_saa", saa)
for dg in ("dg_cardio", "dg_metabolic", "dg_respiratory"):
    both("association", "hub_dg", dg)

QUESTIONNAIRE = {
    "groups": ["dg_cardio", "dg_metabolic", "dg_respiratory"],
    "questions": [
        {"id": "q_chest_pain", "text": "Brustschmerz?", "domain": "boolean",
         "weights": {"dg_cardio": 3, "dg_metabolic": 0, "dg_respiratory": 1}},
        {"id": "q_dyspnea", "text": "Atemnot?", "domain": "boolean",
         "weights": {"dg_cardio": 1, "dg_metabolic": 0, "dg_respiratory": 3}},
        {"id": "q_diabetes", "text": "Bekannter Diabetes mellitus?", "domain": "boolean",
         "weights": {"dg_cardio": 0, "dg_metabolic": 3, "dg_respiratory": 0}},
        {"id": "q_confusion", "text": "Bewusstseinsstörung oder Verwirrtheit?", "domain": "boolean",
         "weights": {"dg_cardio": 1, "dg_metabolic": 2, "dg_respiratory": 0}},
        {"id": "q_wheezing", "text": "Hörbares Giemen?", "domain": "boolean",
         "weights": {"dg_cardio": 0, "dg_metabolic": 0, "dg_respiratory": 3}},
        {"id": "q_onset", "text": "Beginn der Beschwerden?",
         "domain": ["plötzlich", "schleichend", "unbekannt"], "positive": ["plötzlich"],
         "weights": {"dg_cardio": 2, "dg_metabolic": 0, "dg_respiratory": 1}},
    ],
    "vitals_rules": [
        {"parameter": "BLOOD_SUGAR", "comparator": "<=", "threshold": 60, "group": "dg_metabolic", "bonus": 5},
        {"parameter": "BLOOD_SUGAR", "comparator": ">=", "threshold": 250, "group": "dg_metabolic", "bonus": 3},
        {"parameter": "SPO2", "comparator": "<", "threshold": 92, "group": "dg_respiratory", "bonus": 3},
        {"parameter": "PULSE", "comparator": ">", "threshold": 120, "group": "dg_cardio", "bonus": 2},
    ],
}


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "corpus/kirett_sample.json"
    line = lambda o: json.dumps(o, ensure_ascii=False)
    parts = ["{", '  "meta": ' + line({"name": "kirett-synthetic-sample", "version": "1.0.0"}) + ","]
    parts.append('  "nodes": [')
    parts.append(",\n".join("    " + line(n) for n in NODES))
    parts.append("  ],")
    parts.append('  "edges": [')
    parts.append(",\n".join("    " + line(e) for e in EDGES))
    parts.append("  ],")
    parts.append('  "questionnaire": ' + json.dumps(QUESTIONNAIRE, ensure_ascii=False, indent=2).replace("\n", "\n  "))
    parts.append("}")
    with open(out, "w", encoding="utf-8") as f:
        f.write("\n".join(parts) + "\n")


if __name__ == "__main__":
    main()
