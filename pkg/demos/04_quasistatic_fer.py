"""FER of lattice BP versus exhaustive ML on the 2x2 superorthogonal code, quasistatic fading.

Run: python demos/04_quasistatic_fer.py  (a few seconds)
"""
from latticebp.sim import SimConfig, run_quasistatic

ebno = (0.0, 2.0, 4.0, 6.0, 8.0)
print("Eb/N0   ML      BP k=1  agree   simplified k=2")
base = run_quasistatic(SimConfig(ebno_db_list=ebno, packets=10, survivors=1))
simp = run_quasistatic(SimConfig(ebno_db_list=ebno, packets=10, survivors=2, init_scheme="simplified"), with_ml=False)
ml = [r for r in base if r.detector == "ml"]
bp1 = [r for r in base if r.detector == "bp"]
for m, b, s in zip(ml, bp1, simp):
    print(f"{m.ebno_db:5.1f}  {m.fer:.4f}  {b.fer:.4f}  {b.agreement / b.frames:.4f}  {s.fer:.4f}")
