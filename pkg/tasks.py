"""Invoke tasks for chaos-ld."""
from invoke import task


@task
def install(c):
    """Install production dependencies."""
    c.run("pip install -e .")


@task
def dev(c):
    """Install development dependencies."""
    c.run("pip install -e '.[dev]'")


@task
def lint(c):
    """Run ruff linter."""
    c.run("ruff check chaos_ld tests")


@task
def format(c):
    """Format code with black and ruff."""
    c.run("black chaos_ld tests")
    c.run("ruff check --fix chaos_ld tests")


@task
def typecheck(c):
    """Run mypy type checker."""
    c.run("mypy chaos_ld")


@task
def security(c):
    """Run bandit security scanner."""
    c.run("bandit -r chaos_ld -ll --skip B101")


@task
def test(c, cov=True, slow=False):
    """Run pytest (``--slow`` for the reproduction checks)."""
    marker = "-m slow" if slow else ""
    if cov:
        c.run(f"pytest {marker} --cov=chaos_ld --cov-report=term-missing --cov-report=html")
    else:
        c.run(f"pytest -v {marker}")


@task
def clean(c):
    """Remove build artifacts, caches and numba's compiled kernels."""
    c.run("rm -rf build dist *.egg-info")
    c.run("rm -rf .pytest_cache .mypy_cache .ruff_cache htmlcov")
    c.run("find . -type d -name __pycache__ -exec rm -rf {} + || true")
    c.run("find . -type f -name '*.pyc' -delete")
    c.run("find . -type f -name '*.nbi' -delete")
    c.run("find . -type f -name '*.nbc' -delete")


@task
def reproduce(c, output_dir="runs/reproduce", threads=4):
    """Run the desk-scale transfer campaign."""
    c.run(f"chaos-ld --threads {threads} --output-dir {output_dir} reproduce")
