# Simulateur de répéteur quantique Er/Eu
__version__ = "1.0.0"
