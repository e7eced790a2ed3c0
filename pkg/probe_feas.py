"""Dev probe: stage-by-stage feasibility rate of random RUS designs on the
benchmark scenario; informs parameter bounds tuning."""
import time
import numpy as np

from prsynth.scenario import build_benchmark
from prsynth.families import get_family
from prsynth.model import RobotModel
from prsynth import kinematics as K
from prsynth import geometry as G
from prsynth import dynamics as D
from prsynth import objectives as O

sc = build_benchmark()
fam = get_family("RUS")
lo, hi = fam.bounds()
rng = np.random.default_rng(42)
N = 60
stages = {k: 0 for k in ["plaus", "refik", "limits", "selfcol", "install", "traj", "cond", "poserr", "stress", "done"]}
t_start = time.perf_counter()
feasible_examples = []
for trial in range(N):
    p = lo + rng.random(lo.shape) * (hi - lo)
    model = RobotModel(fam, p, platform_extra_mass=sc.platform_extra_mass)
    v = model.params
    if v["platform_radius"] >= v["base_radius"]:
        stages["plaus"] += 1
        continue
    # stage 2 ref IK
    ref_states = []
    try:
        for pt in sc.reference_points:
            ref_states.append(K.solve_ik(model, pt, "out"))
    except K.KinematicsError:
        stages["refik"] += 1
        continue
    # stage 3 joint limits
    lim = model.joint_limits()
    viol = 0.0
    for st in ref_states:
        q2 = st.q2d(model)
        viol = max(viol, float(np.maximum(q2 - lim[:, 1], 0).max()), float(np.maximum(lim[:, 0] - q2, 0).max()))
    if viol > 0:
        stages["limits"] += 1
        continue
    # stage 4 self-collision at ref points
    bad = False
    for st in ref_states:
        caps = G.build_collision_set(model, st)
        if G.self_collision_distance(caps) < 0:
            bad = True; break
    if bad:
        stages["selfcol"] += 1
        continue
    # stage 5 containment
    bad = False
    for st in ref_states:
        caps = G.build_collision_set(model, st)
        rep = G.containment_check(caps, sc.installation_spaces)
        if not rep.all_contained:
            bad = True; break
    if bad:
        stages["install"] += 1
        continue
    # stage 6 trajectory
    try:
        states = K.solve_trajectory(model, sc.trajectory.x, "out")
    except K.KinematicsError:
        stages["traj"] += 1
        continue
    # stage 7 condition
    conds = [K.jacobians(model, st).condition for st in states]
    if max(conds) >= sc.limits.max_cond:
        stages["cond"] += 1
        continue
    # stage 8 pos err
    pe = O.position_error(model, states[::10], sc.encoder_resolution)
    if pe >= sc.limits.max_pos_err:
        stages["poserr"] += 1
        continue
    # stage 9 stress (initial section)
    inertia = D.InertiaModel.from_model(model)
    loads, _ = D.internal_load_estimate(model, inertia, sc.trajectory, states)
    util = loads.stress_utilization(model.tube_diameter, model.tube_wall)
    if util >= sc.limits.max_stress_util:
        stages["stress"] += 1
        continue
    stages["done"] += 1
    feasible_examples.append(p)

print("stage abort counts over", N, "designs:", stages)
print("elapsed", time.perf_counter() - t_start, "s")
if feasible_examples:
    print("example feasible p:", repr(np.array2string(feasible_examples[0], separator=", ")))
