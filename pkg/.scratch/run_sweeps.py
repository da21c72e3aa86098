import time
from dmimo.config import load_config
from dmimo.runner import SweepSpec, run_sweep, emit_csv

base = load_config("/root/pkg/configs/default.yaml")
Q = (1, 4, 16, 64)
L = (125.0, 250.0, 500.0, 1000.0)

t0 = time.time()
spec64 = SweepSpec(base=base, m_total=64, q_list=Q, side_list=L,
                   n_net=10, n_ch=200, seed=1)
emit_csv(run_sweep(spec64), "/root/pkg/.scratch/a1_m64.csv")
print("desk M=64 done", time.time() - t0, flush=True)

t0 = time.time()
spec128 = SweepSpec(base=base, m_total=128, q_list=Q, side_list=L,
                    n_net=10, n_ch=200, seed=1)
emit_csv(run_sweep(spec128), "/root/pkg/.scratch/a1_m128.csv")
print("desk M=128 done", time.time() - t0, flush=True)

t0 = time.time()
probe = SweepSpec(base=base, m_total=64, q_list=(1, 64), side_list=L,
                  n_net=50, n_ch=1000, seed=1)
emit_csv(run_sweep(probe), "/root/pkg/.scratch/paper_q1_q64.csv")
print("paper probes done", time.time() - t0, flush=True)
