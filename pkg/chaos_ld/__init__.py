"""chaos-ld: SALI and Lagrangian-descriptor chaos detection with a transferable linear SVM."""
__version__ = "0.1.0"
