from hypothesis import settings

# property tests explore a fixed example set per test so the suite is
# reproducible run to run
settings.register_profile("default", derandomize=True, deadline=None)
settings.load_profile("default")
