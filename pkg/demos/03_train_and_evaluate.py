"""Both evaluation protocols, side by side, on held-out data.

End-to-end scoring judges the whole pipeline: decisions over every example,
generation quality only where gold and prediction both chose Inquire (BLEU
anywhere else would score questions nobody should have asked). The oracle
protocol instead generates for every gold Inquire example, measuring the
span-to-question path in isolation.
"""

from _common import train_demo_model
from rulereader.evaluation import end_to_end_eval, entailment_accuracy, oracle_qg_eval
from rulereader.labeling import label_corpus
from rulereader.rephrase import TemplateRephraser
from rulereader.synthetic import SyntheticConfig, generate_synthetic

model, _ = train_demo_model(seed=0)

# A corpus the model never trained on.
held_out = label_corpus(generate_synthetic(SyntheticConfig(n_examples=200), seed=99))
rephraser = TemplateRephraser()

print("=== end-to-end protocol")
report = end_to_end_eval(model, held_out, rephraser)
print(report.format_table())

print("\n=== oracle question-generation protocol")
oracle = oracle_qg_eval(model, held_out, rephraser)
print(oracle.format_table())

print(f"\nentailment macro accuracy: {entailment_accuracy(model, held_out):.4f}")
