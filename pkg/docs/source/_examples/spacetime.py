import matplotlib.pyplot as plt
import contactpy as cp

env = cp.make_env(cp.uniform(1.0, 3.0), 3)
rep = cp.sample_rep(env, cp.rect(-10, 10), 6.0, cp.StreamId(3))
traj = cp.evolve(rep, [-1, 0, 1])

_, ax = plt.subplots()
cp.plot_spacetime(traj, ax=ax)
